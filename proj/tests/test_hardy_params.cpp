#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fhl/errors.hpp"
#include "fhl/hardy_params.hpp"
#include "fhl/quadrature.hpp"
#include "fhl/radial_kernel.hpp"
#include "fhl/specfun.hpp"

using namespace fhl;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// m_alpha = 2^{alpha+s} Gamma((N+2s+2alpha)/4) / Gamma((N-2s-2alpha)/4), evaluated with plain tgamma.
double m_alpha(const FracParams& p, double alpha) {
  const double N = p.dim();
  const double s = p.s();
  return std::pow(2.0, alpha + s) * std::tgamma((N + 2 * s + 2 * alpha) / 4) / std::tgamma((N - 2 * s - 2 * alpha) / 4);
}

// The defining integral int (1 - cos xi_1)|xi|^{-N-2s} dxi in polar form:
// int_0^inf (1 - cos t) t^{-1-2s} dt times int_{S^{N-1}} |w_1|^{2s} dw.
double normalization_oracle(int N, double s) {
  // 1 - cos t written as 2 sin^2(t/2) to keep precision at small t.
  auto radial = [s](double t) {
    const double h = std::sin(0.5 * t);
    return 2.0 * h * h * std::pow(t, -1.0 - 2.0 * s);
  };
  // Near 0 the integrand is t^{1-2s}/2; graded panels handle it.
  double radial_sum = quad::graded(radial, 0.0, 2.0 * std::numbers::pi, true, 1e-14);
  const int periods = 20000;
  for (int k = 1; k < periods; ++k) {
    const double a = 2.0 * std::numbers::pi * k;
    radial_sum += quad::gauss(radial, a, a + std::numbers::pi, 24) +
                  quad::gauss(radial, a + std::numbers::pi, a + 2.0 * std::numbers::pi, 24);
  }
  // Tail: the non-oscillating part exactly; the cosine part is O(X^{-2-2s}) at a period end.
  const double X = 2.0 * std::numbers::pi * periods;
  radial_sum += std::pow(X, -2.0 * s) / (2.0 * s);
  const double sub_sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * (N - 1)) / std::tgamma(0.5 * (N - 1));
  auto polar = [&](double th) { return std::pow(std::abs(std::cos(th)), 2.0 * s) * std::pow(std::sin(th), N - 2); };
  const double angular = sub_sphere * 2.0 * quad::graded(polar, 0.0, 0.5 * std::numbers::pi, false, 1e-14);
  return 1.0 / (radial_sum * angular);
}

const std::vector<FracParams>& sample_params() {
  static const std::vector<FracParams> v = {FracParams(2, 0.3), FracParams(2, 0.5), FracParams(3, 0.3),
                                            FracParams(3, 0.4), FracParams(3, 0.5), FracParams(4, 0.5),
                                            FracParams(5, 0.7), FracParams(3, 0.9)};
  return v;
}

}  // namespace

TEST_CASE("FracParams domain") {
  CHECK_THROWS_AS(FracParams(1, 0.3), DomainError);
  CHECK_THROWS_AS(FracParams(3, 0.0), DomainError);
  CHECK_THROWS_AS(FracParams(3, 1.0), DomainError);
  CHECK_NOTHROW(FracParams(2, 0.99));
}

TEST_CASE("hardy constant") {
  CHECK(std::abs(hardy_constant(FracParams(3, 0.999999)) - 0.25) < 1e-5);
  // 2 (Gamma(5/4)/Gamma(3/4))^2 with Gamma values frozen from a 30-digit evaluation.
  const double g54 = 0.906402477055477077982671288967;
  const double g34 = 1.22541670246517764512909830336;
  CHECK(rel(hardy_constant(FracParams(4, 0.5)), 2.0 * (g54 / g34) * (g54 / g34)) < 1e-13);
  for (const auto& p : sample_params()) {
    CHECK(hardy_constant(p) == lambda_of_alpha(p, 0.0));
    CHECK(hardy_constant(p) > 0.0);
  }
}

TEST_CASE("normalization constant matches its defining integral") {
  // N=2, s=1/2: the integral is 2 pi, so a = 1/(2 pi).
  CHECK(rel(normalization_constant(FracParams(2, 0.5)), 1.0 / (2.0 * std::numbers::pi)) < 1e-13);
  CHECK(rel(normalization_constant(FracParams(3, 0.4)), 0.0807751467746861709339297241068) < 1e-13);
  for (const auto& [N, s] : std::vector<std::pair<int, double>>{{2, 0.5}, {3, 0.4}, {4, 0.3}, {5, 0.7}}) {
    CAPTURE(N);
    CAPTURE(s);
    CHECK(rel(normalization_constant(FracParams(N, s)), normalization_oracle(N, s)) < 1e-6);
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> sd(0.01, 0.99);
  std::uniform_int_distribution<int> nd(2, 8);
  for (int i = 0; i < 100; ++i) CHECK(normalization_constant(FracParams(nd(rng), sd(rng))) > 0.0);
}

TEST_CASE("lambda of alpha") {
  const FracParams p(3, 0.5);
  CHECK(lambda_of_alpha(p, p.half_gap() - 1e-6) < 1e-4 * hardy_constant(p));
  CHECK_THROWS_AS(lambda_of_alpha(p, -0.1), DomainError);
  CHECK_THROWS_AS(lambda_of_alpha(p, p.half_gap()), DomainError);
  std::mt19937_64 rng(5);
  for (const auto& q : sample_params()) {
    std::uniform_real_distribution<double> ad(0.0, q.half_gap());
    for (int i = 0; i < 100; ++i) {
      const double a = ad(rng);
      CHECK(std::abs(lambda_of_alpha(q, a) - m_alpha(q, a) * m_alpha(q, -a)) <= 1e-12 * hardy_constant(q));
    }
  }
}

TEST_CASE("lambda strictly decreasing on a fine grid") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> sd(0.05, 0.95);
  std::uniform_int_distribution<int> nd(2, 6);
  for (int t = 0; t < 20; ++t) {
    const FracParams p(nd(rng), sd(rng));
    double prev = lambda_of_alpha(p, 0.0);
    bool decreasing = true;
    for (int i = 1; i < 1000; ++i) {
      const double cur = lambda_of_alpha(p, p.half_gap() * i / 1000.0);
      decreasing = decreasing && cur < prev;
      prev = cur;
    }
    CHECK(decreasing);
  }
}

TEST_CASE("alpha of lambda") {
  const FracParams p(3, 0.5);
  CHECK(alpha_of_lambda(p, hardy_constant(p)) == 0.0);
  CHECK(std::abs(alpha_of_lambda(p, lambda_of_alpha(p, 0.25)) - 0.25) < 1e-10);
  CHECK_THROWS_AS(alpha_of_lambda(p, 0.0), DomainError);
  CHECK_THROWS_AS(alpha_of_lambda(p, 1.01 * hardy_constant(p)), DomainError);
  std::mt19937_64 rng(9);
  for (const auto& q : sample_params()) {
    std::uniform_real_distribution<double> ad(0.0, 0.999 * q.half_gap());
    for (int i = 0; i < 100; ++i) {
      const double a = ad(rng);
      const double lam = lambda_of_alpha(q, a);
      const double back = alpha_of_lambda(q, lam);
      CHECK(std::abs(lambda_of_alpha(q, back) - lam) <= 1e-12 * hardy_constant(q));
      CHECK(std::abs(back - a) < 1e-10);
    }
  }
}

TEST_CASE("coupling") {
  const FracParams p(3, 0.5);
  const HardyCoupling at = coupling(p, hardy_constant(p));
  CHECK(at.gamma == p.half_gap());
  CHECK(at.gamma_bar == p.half_gap());
  const HardyCoupling half = coupling(p, 0.5 * hardy_constant(p));
  CHECK(half.gamma > 0.0);
  CHECK(half.gamma < 1.0);
  CHECK(std::abs(lambda_of_alpha(p, p.half_gap() - half.gamma) - 0.5 * hardy_constant(p)) < 1e-10);
  for (const auto& q : sample_params()) {
    const HardyCoupling c = coupling(q, 0.3 * hardy_constant(q));
    CHECK(c.gamma + c.gamma_bar == doctest::Approx(q.dim() - 2.0 * q.s()).epsilon(1e-15));
    CHECK(c.gamma > 0.0);
    CHECK(c.gamma_bar < q.dim() - 2.0 * q.s());
  }
}

TEST_CASE("ground state shift") {
  for (const auto& p : sample_params()) {
    const double L = hardy_constant(p);
    CHECK(rel(ground_state_shift(p, 1e-8), -L) < 1e-4);
    CHECK(std::abs(ground_state_shift(p, p.half_gap() - 1e-8)) < 1e-6 * L);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ad(1e-6, p.half_gap() - 1e-6);
    for (int i = 0; i < 100; ++i) {
      const double a = ad(rng);
      CHECK(std::abs(L + ground_state_shift(p, p.half_gap() - a) - lambda_of_alpha(p, a)) <= 1e-11 * L);
    }
  }
  CHECK_THROWS_AS(ground_state_shift(FracParams(3, 0.5), 0.0), DomainError);
}

TEST_CASE("power multiplier") {
  for (const auto& p : sample_params()) {
    const double L = hardy_constant(p);
    CHECK(rel(power_multiplier(p, p.half_gap()), L) < 1e-13);
    for (int i = 1; i < 20; ++i) {
      const double b = (p.dim() - 2.0 * p.s()) * i / 20.0;
      CHECK(rel(power_multiplier(p, b), power_multiplier(p, p.dim() - 2.0 * p.s() - b)) < 1e-12);
    }
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ld(1e-6, 1.0);
    for (int i = 0; i < 100; ++i) {
      const double lam = ld(rng) * L;
      CHECK(std::abs(power_multiplier(p, coupling(p, lam).gamma) - lam) <= 1e-11 * L);
    }
  }
  // Independent quadrature of the principal-value integral.
  const FracParams p(3, 0.5);
  const double quad = apply_pointwise(p, RadialFunction::power(-0.7), 1.0);
  CHECK(rel(quad, power_multiplier(p, 0.7)) < 1e-6);
  CHECK_THROWS_AS(power_multiplier(p, 2.0), DomainError);
}

TEST_CASE("curves J and P") {
  for (const auto& p : sample_params()) {
    const double L = hardy_constant(p);
    const double lo = curve_left_endpoint(p);
    const double hi = curve_right_endpoint(p);
    CHECK(std::abs(curve_J(p, lo) - curve_P(p, lo)) <= 1e-10 * L);
    CHECK(std::abs(curve_P(p, lo) - L) <= 1e-12 * L);
    CHECK(curve_J(p, hi * (1.0 - 1e-9)) < 1e-7 * L);
    CHECK(curve_J(p, 1.0 + 1e-9) < 1e-7 * L);
    // Gamma(N/(2m) - s) sits in the denominator, so P -> 0 at the right endpoint.
    CHECK(curve_P(p, hi * (1.0 - 1e-9)) < 1e-7 * L);
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> md(lo, hi);
    for (int i = 0; i < 100; ++i) {
      const double m = md(rng);
      CHECK(std::abs(curve_P(p, m) - lambda_of_alpha(p, alpha0_of_m(p, m))) <= 1e-11 * L);
    }
    for (int i = 1; i <= 20; ++i) {
      const double m = lo + (hi - lo) * i / 21.0;
      CHECK(curve_P(p, m) - curve_J(p, m) > 1e-8 * L);
    }
  }
  const FracParams p(3, 0.5);
  CHECK_FALSE(curve_P_near_pole(p, 2.9));
  CHECK(curve_P_near_pole(p, 3.0 * (1.0 - 1e-7)));
  CHECK_THROWS_AS(curve_P(p, 1.2), DomainError);
  CHECK_THROWS_AS(curve_J(p, 3.0), DomainError);
}

TEST_CASE("curve comparison and D(m)") {
  for (const auto& p : sample_params()) {
    const double lo = curve_left_endpoint(p);
    const double hi = curve_right_endpoint(p);
    std::vector<double> grid;
    for (int i = 0; i < 200; ++i) grid.push_back(lo + (hi - lo) * i / 200.0);
    const CurveComparison cc = curve_comparison(p, grid);
    CHECK(cc.J_le_P);
    CHECK(cc.D_nondecreasing);
    CHECK(cc.D_ge_theta);
    CHECK(rel(cc.points.front().D, cc.theta) < 1e-10);
    CHECK(cc.points.size() == grid.size());
    CHECK(cc.points[5].m_star_star > cc.points[5].m_star);
  }
}

TEST_CASE("digamma combination is the log-derivative of D") {
  for (const auto& p : sample_params()) {
    const double N = p.dim();
    const double s = p.s();
    const double lo = curve_left_endpoint(p);
    const double hi = curve_right_endpoint(p);
    for (int i = 1; i < 10; ++i) {
      const double m = lo + (hi - lo) * i / 10.0;
      const double h = 1e-6;
      const double dlog = (std::log(curve_D(p, m + h)) - std::log(curve_D(p, m - h))) / (2.0 * h);
      const double algebraic = 2.0 / m - 1.0 / (m - 1.0) + 2.0 * s / (N - 2.0 * s * m);
      CHECK(std::abs(dlog - algebraic - N / (2.0 * m * m) * digamma_combination(p, m)) < 1e-6);
    }
    CHECK(std::isfinite(digamma_combination(p, lo)));
  }
}

TEST_CASE("critical exponent") {
  for (const auto& p : sample_params()) {
    const double N = p.dim();
    const double s = p.s();
    const double L = hardy_constant(p);
    CHECK(rel(critical_exponent(p, L), (N + 2.0 * s) / (N - 2.0 * s)) < 1e-13);
    CHECK(critical_exponent(p, 1e-8 * L) > 1e3);
    double prev = critical_exponent(p, 0.01 * L);
    for (int i = 2; i <= 100; ++i) {
      const double cur = critical_exponent(p, 0.01 * i * L);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("sobolev exponents") {
  for (const auto& p : sample_params()) {
    const double N = p.dim();
    const double s = p.s();
    CHECK(rel(sobolev_exponents(p, curve_left_endpoint(p)).first, 2.0 * N / (N - 2.0 * s)) < 1e-14);
    CHECK(rel(sobolev_exponents(p, 1.0).first, N / (N - 2.0 * s)) < 1e-15);
    for (int i = 1; i < 20; ++i) {
      const double m = 1.0 + (curve_right_endpoint(p) - 1.0) * i / 20.0;
      const auto [mss, ms] = sobolev_exponents(p, m);
      CHECK(mss > ms);
      CHECK(ms > m);
    }
  }
  CHECK_THROWS_AS(sobolev_exponents(FracParams(3, 0.5), 3.0), DomainError);
}

TEST_CASE("algebraic inequality") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> sd(0.0, 10.0);
  std::uniform_real_distribution<double> ad(1e-3, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double s1 = sd(rng);
    const double s2 = sd(rng);
    const double a = ad(rng);
    const double scale = std::pow(std::max({1.0, s1, s2}), a + 1.0);
    worst = std::min(worst, algebraic_inequality_gap(s1, s2, a) / scale);
    CHECK(algebraic_inequality_gap(s1, s2, 1.0) == 0.0);
  }
  CHECK(worst >= -1e-14);
  for (double a : {0.3, 1.0, 2.5}) {
    const double s1 = 1.7;
    const double expected = std::pow(s1, a + 1.0) * (1.0 - 4.0 * a / ((a + 1.0) * (a + 1.0)));
    CHECK(std::abs(algebraic_inequality_gap(s1, 0.0, a) - expected) < 1e-13);
    CHECK(algebraic_inequality_gap(s1, 0.0, a) >= 0.0);
  }
}

TEST_CASE("bit-identical outputs") {
  const FracParams p(3, 0.4);
  CHECK(curve_P(p, 1.7) == curve_P(p, 1.7));
  CHECK(alpha_of_lambda(p, 0.3) == alpha_of_lambda(p, 0.3));
}
