#include "fhl/hardy_params.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>

#include "fhl/errors.hpp"
#include "fhl/specfun.hpp"

namespace fhl {

namespace {

using specfun::ln_gamma;

constexpr double kLn2 = std::numbers::ln2;

std::string describe(const char* what, double value) {
  std::ostringstream os;
  os.precision(17);
  os << what << " = " << value;
  return os.str();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw DomainError(message);
}

// log of 2^{2s} Gamma(a1) Gamma(a2) / (Gamma(b1) Gamma(b2)).
double log_gamma_ratio(double s, double a1, double a2, double b1, double b2) {
  return 2.0 * s * kLn2 + ln_gamma(a1) + ln_gamma(a2) - ln_gamma(b1) - ln_gamma(b2);
}

}  // namespace

FracParams::FracParams(int N, double s) : n_(N), s_(s) {
  require(N >= 2, "N must be >= 2 (the angular kernel needs a sphere S^{N-2}); " + describe("N", N));
  require(s > 0.0 && s < 1.0, "s must lie in (0,1); " + describe("s", s));
  require(N > 2.0 * s, "N must exceed 2s");
}

double curve_left_endpoint(const FracParams& p) { return 2.0 * p.dim() / (p.dim() + 2.0 * p.s()); }

double curve_right_endpoint(const FracParams& p) { return p.dim() / (2.0 * p.s()); }

double hardy_constant(const FracParams& p) { return lambda_of_alpha(p, 0.0); }

double normalization_constant(const FracParams& p) {
  const double N = p.dim();
  const double s = p.s();
  // Inverse of int (1 - cos xi_1)|xi|^{-N-2s} dxi; |Gamma(-s)| = Gamma(1-s)/s on (0,1).
  const double log_a = 2.0 * s * kLn2 - 0.5 * N * std::log(std::numbers::pi) +
                       ln_gamma(0.5 * (N + 2.0 * s)) - ln_gamma(1.0 - s) + std::log(s);
  return std::exp(log_a);
}

double sphere_area(int N) {
  const double n = static_cast<double>(N);
  return 2.0 * std::exp(0.5 * n * std::log(std::numbers::pi) - ln_gamma(0.5 * n));
}

double lambda_of_alpha(const FracParams& p, double alpha) {
  const double N = p.dim();
  const double s = p.s();
  require(alpha >= 0.0 && alpha < p.half_gap(),
          "alpha must lie in [0, (N-2s)/2); " + describe("alpha", alpha));
  return std::exp(log_gamma_ratio(s, 0.25 * (N + 2.0 * s + 2.0 * alpha), 0.25 * (N + 2.0 * s - 2.0 * alpha),
                                  0.25 * (N - 2.0 * s + 2.0 * alpha), 0.25 * (N - 2.0 * s - 2.0 * alpha)));
}

double alpha_of_lambda(const FracParams& p, double lambda) {
  const double big_lambda = hardy_constant(p);
  require(lambda > 0.0, "lambda must be positive; " + describe("lambda", lambda));
  require(lambda <= big_lambda * (1.0 + 1e-14),
          "lambda exceeds the Hardy constant; " + describe("lambda", lambda));
  if (lambda >= big_lambda) return 0.0;

  // lambda(.) is strictly decreasing on [0, (N-2s)/2).
  double lo = 0.0;
  double hi = p.half_gap();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (lambda_of_alpha(p, mid) > lambda) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

HardyCoupling coupling(const FracParams& p, double lambda) {
  HardyCoupling c;
  c.lambda = lambda;
  c.alpha = alpha_of_lambda(p, lambda);
  c.gamma = p.half_gap() - c.alpha;
  c.gamma_bar = p.half_gap() + c.alpha;
  return c;
}

double power_multiplier(const FracParams& p, double beta) {
  const double N = p.dim();
  const double s = p.s();
  require(beta > 0.0 && beta < N - 2.0 * s, "beta must lie in (0, N-2s); " + describe("beta", beta));
  return std::exp(log_gamma_ratio(s, 0.5 * (beta + 2.0 * s), 0.5 * (N - beta), 0.5 * (N - beta - 2.0 * s),
                                  0.5 * beta));
}

double ground_state_shift(const FracParams& p, double gamma) {
  require(gamma > 0.0 && gamma < p.half_gap(), "gamma must lie in (0, (N-2s)/2); " + describe("gamma", gamma));
  return power_multiplier(p, gamma) - hardy_constant(p);
}

double alpha0_of_m(const FracParams& p, double m) { return 0.5 * (p.dim() + 2.0 * p.s()) - p.dim() / m; }

double curve_J(const FracParams& p, double m) {
  const double N = p.dim();
  const double s = p.s();
  require(m > 1.0 && m < curve_right_endpoint(p), "m must lie in (1, N/(2s)); " + describe("m", m));
  const double gap = N - 2.0 * s;
  return hardy_constant(p) * 4.0 * N * (m - 1.0) * (N - 2.0 * m * s) / (m * m * gap * gap);
}

namespace {

void require_P_domain(const FracParams& p, double m) {
  const double left = curve_left_endpoint(p);
  require(m >= left * (1.0 - 1e-14) && m < curve_right_endpoint(p),
          "m must lie in [2N/(N+2s), N/(2s)); " + describe("m", m));
}

// log of Gamma((N+2s)/2 - N/(2m)) Gamma(N/(2m)) / (Gamma(N/2 - N/(2m)) Gamma(N/(2m) - s)).
double log_D1(const FracParams& p, double m) {
  const double N = p.dim();
  const double s = p.s();
  const double d = N / (2.0 * m);
  return ln_gamma(0.5 * (N + 2.0 * s) - d) + ln_gamma(d) - ln_gamma(0.5 * N - d) - ln_gamma(d - s);
}

}  // namespace

double curve_P(const FracParams& p, double m) {
  require_P_domain(p, m);
  return std::exp(2.0 * p.s() * kLn2 + log_D1(p, m));
}

bool curve_P_near_pole(const FracParams& p, double m) { return p.dim() / (2.0 * m) - p.s() < 1e-6; }

double curve_D(const FracParams& p, double m) {
  require_P_domain(p, m);
  require(m > 1.0, "m must exceed 1");
  const double N = p.dim();
  const double s = p.s();
  return m * m / ((m - 1.0) * (N - 2.0 * s * m)) * std::exp(log_D1(p, m));
}

double curve_theta(const FracParams& p) {
  const double N = p.dim();
  const double s = p.s();
  const double gap = N - 2.0 * s;
  const double g = ln_gamma(0.25 * (N + 2.0 * s)) - ln_gamma(0.25 * gap);
  return 4.0 * N / (gap * gap) * std::exp(2.0 * g);
}

CurveComparison curve_comparison(const FracParams& p, std::span<const double> m_grid) {
  CurveComparison out;
  out.theta = curve_theta(p);
  const double big_lambda = hardy_constant(p);
  for (double m : m_grid) {
    SummabilityPoint pt;
    pt.m = m;
    pt.J = curve_J(p, m);
    pt.P = curve_P(p, m);
    std::tie(pt.m_star_star, pt.m_star) = sobolev_exponents(p, m);
    pt.alpha0 = alpha0_of_m(p, m);
    pt.D = curve_D(p, m);
    pt.near_pole = curve_P_near_pole(p, m);
    pt.violates_order = pt.J > pt.P + 1e-12 * big_lambda;
    if (pt.violates_order) out.J_le_P = false;
    if (pt.D < out.theta * (1.0 - 1e-12)) out.D_ge_theta = false;
    if (!out.points.empty() && pt.m > out.points.back().m && pt.D < out.points.back().D * (1.0 - 1e-12)) {
      out.D_nondecreasing = false;
    }
    out.points.push_back(pt);
  }
  return out;
}

double digamma_combination(const FracParams& p, double m) {
  const double N = p.dim();
  const double s = p.s();
  const double d = N / (2.0 * m);
  const double a = 0.5 * (N + 2.0 * s) - d;
  const double b = 0.5 * N - d;
  const double c = d - s;
  require(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0,
          "digamma arguments must be positive; " + describe("m", m));
  using specfun::digamma;
  return digamma(a) - digamma(b) + digamma(c) - digamma(d);
}

double critical_exponent(const FracParams& p, double lambda) {
  return 1.0 + 2.0 * p.s() / coupling(p, lambda).gamma;
}

std::pair<double, double> sobolev_exponents(const FracParams& p, double m) {
  const double N = p.dim();
  const double s = p.s();
  require(m >= 1.0 && m < curve_right_endpoint(p), "m must lie in [1, N/(2s)); " + describe("m", m));
  return {m * N / (N - 2.0 * m * s), m * N / (N - m * s)};
}

double algebraic_inequality_gap(double s1, double s2, double a) {
  const double lhs = (s1 - s2) * (std::pow(s1, a) - std::pow(s2, a));
  const double half = 0.5 * (a + 1.0);
  const double diff = std::pow(s1, half) - std::pow(s2, half);
  return lhs - 4.0 * a / ((a + 1.0) * (a + 1.0)) * diff * diff;
}

}  // namespace fhl
