#include "fhl/specfun.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fhl/errors.hpp"

namespace fhl::specfun {

namespace {

constexpr double kGammaOverflow = 171.62437695630272;

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

// Stirling series for log Gamma, accurate to ~1e-16 absolute for x >= 10.
double ln_gamma_stirling(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 / 12.0 -
             inv2 * (1.0 / 360.0 -
                     inv2 * (1.0 / 1260.0 -
                             inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0 - inv2 * (691.0 / 360360.0))))));
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

}  // namespace

double gamma(double x) {
  if (std::isnan(x)) throw DomainError("gamma: NaN argument");
  if (is_nonpositive_integer(x)) {
    throw PoleError("gamma: pole at non-positive integer x = " + std::to_string(x));
  }
  if (x > kGammaOverflow) throw OverflowError("gamma: overflow for x = " + std::to_string(x));
  const double g = std::tgamma(x);
  if (!std::isfinite(g)) throw OverflowError("gamma: non-finite result for x = " + std::to_string(x));
  return g;
}

double ln_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("ln_gamma: requires x > 0, got " + std::to_string(x));
  if (std::isinf(x)) return x;
  if (x < 10.0) return std::log(std::tgamma(x));
  return ln_gamma_stirling(x);
}

double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: requires x > 0, got " + std::to_string(x));
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_{2k} / (2k x^{2k}) up to k = 7.
  const double tail =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
  return shift + std::log(x) - 0.5 * inv - tail;
}

double digamma_series(double t, double tol) {
  if (!(t > 0.0)) throw DomainError("digamma_series: requires t > 0");
  // f(n) = 1/(n(n+t)); sum_{n>K} f(n) from Euler-Maclaurin with three
  // derivative corrections.
  auto f = [t](double n) { return 1.0 / (n * (n + t)); };
  auto tail_from = [&](double k) {
    const double integral = std::log1p(t / k) / t;
    const double nt = k + t;
    const double d1 = -(2.0 * k + t) / (k * k * nt * nt);
    const double d3 = 6.0 * (1.0 / std::pow(nt, 4) - 1.0 / std::pow(k, 4)) / t;
    const double d5 = 120.0 * (1.0 / std::pow(nt, 6) - 1.0 / std::pow(k, 6)) / t;
    // sum_{n>=k} f(n) = int_k^inf f + f(k)/2 - B2/2! f' - B4/4! f''' - B6/6! f^(5)
    const double from_k = integral + 0.5 * f(k) - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0;
    return from_k - f(k);
  };

  double previous = 0.0;
  long terms = 64;
  while (terms < 64L * (t + 1.0)) terms *= 2;
  double partial = 0.0;
  long summed = 0;
  for (int round = 0; round < 20; ++round) {
    for (long n = summed + 1; n <= terms; ++n) partial += f(static_cast<double>(n));
    summed = terms;
    const double value = -1.0 / t - kEulerGamma + t * (partial + tail_from(static_cast<double>(terms)));
    if (round > 0 && std::abs(value - previous) <= tol * std::max(1.0, std::abs(value))) return value;
    previous = value;
    terms *= 2;
  }
  throw ConvergenceError("digamma_series: tail estimate did not stabilise");
}

double euler_constant() { return kEulerGamma; }

}  // namespace fhl::specfun
