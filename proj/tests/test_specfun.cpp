#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fhl/errors.hpp"
#include "fhl/specfun.hpp"

using namespace fhl;
using namespace fhl::specfun;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("gamma reference values") {
  CHECK(specfun::gamma(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(specfun::gamma(5.0) == doctest::Approx(24.0).epsilon(1e-15));
  CHECK(rel(specfun::gamma(0.5), std::sqrt(std::numbers::pi)) < 1e-14);
  // gamma'(1) = -C0
  CHECK(std::abs(specfun::gamma(1.0 + 1e-8) - (1.0 - kEulerGamma * 1e-8)) < 1e-14);
  // Negative arguments go through reflection: Gamma(-1/2) = -2 sqrt(pi).
  CHECK(rel(specfun::gamma(-0.5), -2.0 * std::sqrt(std::numbers::pi)) < 1e-13);
}

TEST_CASE("gamma relative accuracy on [1e-3, 170]") {
  // Gamma(n) = (n-1)! and Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!) built by recurrence in long double.
  long double fact = 1.0L;
  for (int n = 1; n <= 170; ++n) {
    if (n > 1) fact *= (n - 1);
    CHECK(rel(specfun::gamma(n), static_cast<double>(fact)) < 1e-13);
  }
  long double half = std::sqrt(std::numbers::pi_v<long double>);
  for (int n = 0; n < 160; ++n) {
    CHECK(rel(specfun::gamma(n + 0.5), static_cast<double>(half)) < 1e-13);
    half *= (n + 0.5L);
  }
  // Small arguments: Gamma(x) = Gamma(x+1)/x.
  for (double x : {1e-3, 3e-3, 0.01, 0.1}) CHECK(rel(specfun::gamma(x), specfun::gamma(x + 1.0) / x) < 1e-13);
}

TEST_CASE("gamma poles and overflow are reported") {
  CHECK_THROWS_AS(specfun::gamma(0.0), PoleError);
  CHECK_THROWS_AS(specfun::gamma(-3.0), PoleError);
  CHECK_THROWS_AS(specfun::gamma(172.0), OverflowError);
  CHECK_NOTHROW(specfun::gamma(171.5));
}

TEST_CASE("ln_gamma") {
  CHECK(std::abs(ln_gamma(1.0)) < 1e-15);
  CHECK(std::abs(ln_gamma(2.0)) < 1e-15);
  double sum = 0.0;
  for (int k = 2; k <= 9; ++k) sum += std::log(static_cast<double>(k));
  CHECK(rel(ln_gamma(10.0), sum) < 1e-14);
  CHECK(rel(ln_gamma(10.0), 12.801827480081469611) < 1e-14);
  for (double x : {0.01, 0.3, 1.7, 5.5, 9.99, 10.01, 33.3, 120.0, 170.0}) {
    CHECK(rel(std::exp(ln_gamma(x)), specfun::gamma(x)) < 1e-12);
  }
  CHECK(std::isfinite(ln_gamma(1e300)));
  CHECK_THROWS_AS(ln_gamma(0.0), DomainError);
  CHECK_THROWS_AS(ln_gamma(-1.5), DomainError);
}

TEST_CASE("digamma reference values") {
  CHECK(std::abs(digamma(1.0) + 0.5772156649015329) < 1e-12);
  CHECK(std::abs(digamma(2.0) - (1.0 - kEulerGamma)) < 1e-12);
  CHECK(std::abs(digamma(0.5) - (-kEulerGamma - 2.0 * std::numbers::ln2)) < 1e-12);
  CHECK(std::abs(digamma(0.5) + 1.963510026021423479) < 1e-12);
  CHECK(std::abs(digamma(1.0) + euler_constant()) < 1e-12);
  CHECK_THROWS_AS(digamma(0.0), DomainError);
}

TEST_CASE("digamma agrees with the series definition on (0, 50]") {
  double worst = 0.0;
  for (int i = 1; i <= 500; ++i) {
    const double x = 0.1 * i;
    worst = std::max(worst, std::abs(digamma(x) - digamma_series(x)));
  }
  for (double x : {1e-3, 0.01, 0.05}) worst = std::max(worst, std::abs(digamma(x) - digamma_series(x)));
  CHECK(worst < 1e-9);
  // The series itself telescopes to -C0 at t = 1.
  CHECK(std::abs(digamma_series(1.0) + kEulerGamma) < 1e-12);
}

TEST_CASE("euler constant from harmonic numbers") {
  // H_n - ln n - 1/(2n) + 1/(12 n^2) - 1/(120 n^4) -> C0 with O(n^-6) error.
  const int n = 1000000;
  long double h = 0.0L;
  for (int k = n; k >= 1; --k) h += 1.0L / k;
  const long double nn = n;
  const long double c0 = h - std::log(nn) - 1.0L / (2 * nn) + 1.0L / (12 * nn * nn) - 1.0L / (120 * nn * nn * nn * nn);
  CHECK(std::abs(static_cast<double>(c0) - euler_constant()) < 1e-13);
  CHECK(euler_constant() == 0.5772156649015329);
}

TEST_CASE("recurrence and reflection") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.01, 80.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = dist(rng);
    CHECK(rel(specfun::gamma(x + 1.0), x * specfun::gamma(x)) < 1e-12);
  }
  std::uniform_real_distribution<double> unit(1e-6, 1.0 - 1e-6);
  for (int i = 0; i < 1000; ++i) {
    const double x = unit(rng);
    CHECK(rel(specfun::gamma(x) * specfun::gamma(1.0 - x), std::numbers::pi / std::sin(std::numbers::pi * x)) < 1e-11);
  }
}

TEST_CASE("digamma is the logarithmic derivative and increasing") {
  const double h = 1e-5;
  for (int i = 0; i <= 195; ++i) {
    const double x = 0.5 + 0.1 * i;
    const double fd = (ln_gamma(x + h) - ln_gamma(x - h)) / (2.0 * h);
    CHECK(std::abs(fd - digamma(x)) < 1e-6);
  }
  double prev = digamma(0.01);
  for (int i = 1; i < 1000; ++i) {
    const double x = 0.01 + 0.05 * i;
    const double cur = digamma(x);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("bit-identical repeated evaluation") {
  for (double x : {0.37, 4.2, 77.7}) {
    CHECK(specfun::gamma(x) == specfun::gamma(x));
    CHECK(digamma(x) == digamma(x));
  }
}
