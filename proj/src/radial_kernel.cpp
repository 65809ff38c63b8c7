#include "fhl/radial_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "fhl/errors.hpp"
#include "fhl/quadrature.hpp"
#include "fhl/specfun.hpp"

namespace fhl {

namespace {

constexpr double kTableEpsMin = 1e-8;

// c_N int_0^pi sin^{N-2}(t) (eps^2 + 4 tau sin^2(t/2))^{-(N+kappa)/2} dt, where
// eps = |1 - tau|; the base equals 1 - 2 tau cos t + tau^2 without cancellation.
double angular_integral(int N, double kappa, double tau, double eps) {
  const double c_n = 2.0 * std::pow(std::numbers::pi, 0.5 * (N - 1)) / specfun::gamma(0.5 * (N - 1));
  const double expo = -0.5 * (N + kappa);
  auto f = [&](double t) {
    const double h = std::sin(0.5 * t);
    const double base = eps * eps + 4.0 * tau * h * h;
    const double sn = N == 2 ? 1.0 : std::pow(std::sin(t), N - 2);
    return sn * std::pow(base, expo);
  };
  // The integrand is peaked on the scale t ~ eps; panels double from there.
  double total = 0.0;
  double lo = 0.0;
  double hi = std::min(eps, std::numbers::pi);
  while (true) {
    total += quad::adaptive(f, lo, hi, 1e-13, 0.0, 16, 40);
    if (hi >= std::numbers::pi) break;
    lo = hi;
    hi = std::min(2.0 * hi, std::numbers::pi);
  }
  return c_n * total;
}

// Cubic Lagrange interpolation on a uniform grid starting at x0 with step h.
double lagrange4(const std::vector<double>& y, double x0, double h, double x) {
  const int n = static_cast<int>(y.size());
  const double u = (x - x0) / h;
  int i = static_cast<int>(std::floor(u)) - 1;
  i = std::clamp(i, 0, n - 4);
  const double t = u - i;  // position relative to node i, nodes at 0,1,2,3
  const double l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
  const double l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
  const double l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
  const double l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
  return l0 * y[i] + l1 * y[i + 1] + l2 * y[i + 2] + l3 * y[i + 3];
}

void check_n(int N) {
  if (N < 2) throw DomainError("angular kernel: N must be >= 2");
}

}  // namespace

double angular_kernel_value(const FracParams& p, double kappa, double tau) {
  if (!(tau > 0.0)) throw DomainError("angular kernel: tau must be positive");
  if (tau == 1.0) throw PoleError("angular kernel: singular at tau = 1");
  if (!(kappa > 0.0)) throw DomainError("angular kernel: kappa must be positive");
  return angular_integral(p.N(), kappa, tau, std::abs(1.0 - tau));
}

double angular_kernel_near_one(int N, double kappa, double one_minus_tau) {
  check_n(N);
  if (!(one_minus_tau > 0.0) || one_minus_tau > 1.0) {
    throw DomainError("angular kernel: 1 - tau must lie in (0, 1]");
  }
  return angular_integral(N, kappa, 1.0 - one_minus_tau, one_minus_tau);
}

AngularKernel::AngularKernel(int N, double kappa, int table_size) : n_(N), kappa_(kappa) {
  check_n(N);
  if (!(kappa > 0.0)) throw DomainError("angular kernel: kappa must be positive");
  if (table_size < 8) throw DomainError("angular kernel: table too small");
  x_min_ = std::log(kTableEpsMin);
  h_ = -x_min_ / (table_size - 1);
  x_.resize(table_size);
  log_g_.resize(table_size);
  for (int i = 0; i < table_size; ++i) {
    const double x = i + 1 == table_size ? 0.0 : x_min_ + i * h_;
    const double eps = std::exp(x);
    x_[i] = x;
    log_g_[i] = std::log(angular_integral(N, kappa, 1.0 - eps, eps)) + (1.0 + kappa) * x;
  }
}

double AngularKernel::log_regular(double x) const {
  if (x <= x_min_) return log_g_.front();
  if (x >= 0.0) return log_g_.back();
  return lagrange4(log_g_, x_min_, h_, x);
}

double AngularKernel::value(double tau) const {
  if (!(tau > 0.0)) throw DomainError("angular kernel: tau must be positive");
  if (tau == 1.0) throw PoleError("angular kernel: singular at tau = 1");
  if (tau < 1.0) return value_near(1.0 - tau);
  // D(tau) = tau^{-(N+kappa)} D(1/tau), 1 - 1/tau = (tau - 1)/tau.
  return std::exp(log_value_near((tau - 1.0) / tau) - (n_ + kappa_) * std::log(tau));
}

std::shared_ptr<const AngularKernel> shared_angular_kernel(int N, double kappa) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, std::shared_ptr<const AngularKernel>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{N, kappa}];
  if (!slot) slot = std::make_shared<const AngularKernel>(N, kappa);
  return slot;
}

ExteriorWeight::ExteriorWeight(std::shared_ptr<const AngularKernel> kernel, double weight_exponent)
    : kernel_(std::move(kernel)), w_(weight_exponent) {
  const double kappa = kernel_->kappa();
  if (!(kappa + w_ > 0.0)) throw DomainError("exterior weight: kappa + w must be positive");
  const auto xs = kernel_->grid_x();
  const std::size_t n = xs.size();
  x_min_ = xs.front();
  h_ = xs[1] - xs[0];
  log_q_.assign(n, 0.0);
  // Integrand in y = log(1 - t): t^{kappa-1+w} D(t) e^y, smooth once t is away from 0.
  auto integrand_y = [&](double y) {
    const double t = -std::expm1(y);
    return std::pow(t, kappa - 1.0 + w_) * std::exp(kernel_->log_value_near(std::exp(y)) + y);
  };
  // First cell [0, t_1] carries the t^{kappa-1+w} endpoint singularity; integrate in t.
  const double t1 = -std::expm1(xs[n - 2]);
  auto integrand_t = [&](double t) { return std::pow(t, kappa - 1.0 + w_) * kernel_->value_near(1.0 - t); };
  double W = quad::graded(integrand_t, 0.0, t1, true, 1e-13, 16);
  auto store = [&](std::size_t i, double Wi) {
    const double x = xs[i];
    const double r = -std::expm1(x);
    log_q_[i] = std::log(Wi) + kappa * x - (kappa + w_) * std::log(r);
  };
  store(n - 2, W);
  for (std::size_t i = n - 2; i-- > 0;) {
    W += quad::gauss(integrand_y, xs[i], xs[i + 1], 8);
    store(i, W);
  }
  // r -> 0: W ~ D(0) r^{kappa+w}/(kappa+w).
  log_q_[n - 1] = std::log(kernel_->value_near(1.0) / (kappa + w_));
}

double ExteriorWeight::value(double r) const {
  if (!(r > 0.0) || !(r < 1.0)) throw DomainError("exterior weight: r must lie in (0, 1)");
  const double x = std::log1p(-r);
  const double kappa = kernel_->kappa();
  double lq;
  if (x <= x_min_) {
    lq = log_q_.front();
  } else {
    lq = lagrange4(log_q_, x_min_, h_, std::min(x, 0.0));
  }
  return std::exp(lq - kappa * x + (kappa + w_) * std::log(r));
}

PairQuadrature::PairQuadrature(std::shared_ptr<const AngularKernel> kernel, double weight_exponent,
                               double diff_exponent)
    : kernel_(std::move(kernel)), w_(weight_exponent) {
  const double excess = diff_exponent - kernel_->kappa();
  if (!(excess > 0.0)) throw DomainError("pair quadrature: need diff exponent q > kappa for a finite form");
  const double digits = 13.0 * std::log(10.0) / std::log(4.0);
  gap_panels_ = std::clamp(static_cast<int>(std::ceil(digits / excess)) + 1, 4, 400);
  duffy_panels_ = std::clamp(static_cast<int>(std::ceil(digits / (excess + 1.0))) + 1, 4, 400);
}

namespace {

// Bracket of a power sum at tau = e^L:
// c r^q (1 - tau^q)(tau^{N-1} - tau^{2s-1-q}) written through expm1.
double power_bracket(const FracParams& p, const RadialFunction& g, double r, double L) {
  const double N = p.dim();
  const double s2 = 2.0 * p.s();
  const double tn = std::exp((N - 1.0) * L);
  double sum = 0.0;
  for (const auto& t : g.terms()) {
    if (t.exponent == 0.0) continue;
    sum += t.coeff * std::pow(r, t.exponent) * std::expm1(t.exponent * L) * tn * std::expm1((s2 - N - t.exponent) * L);
  }
  return sum;
}

}  // namespace

double pv_bracket(const FracParams& p, const RadialFunction& g, double r, double tau) {
  if (g.kind() == RadialFunction::Kind::PowerSum) return power_bracket(p, g, r, std::log(tau));
  const double N = p.dim();
  const double s2 = 2.0 * p.s();
  return g(r) * (std::pow(tau, N - 1.0) + std::pow(tau, s2 - 1.0)) - g(r * tau) * std::pow(tau, N - 1.0) -
         g(r / tau) * std::pow(tau, s2 - 1.0);
}

double apply_pointwise(const FracParams& p, const RadialFunction& g, double r, double rel_tol) {
  if (!(r > 0.0)) throw DomainError("apply_pointwise: r must be positive");
  const double s2 = 2.0 * p.s();
  auto kernel = shared_angular_kernel(p.N(), s2);
  const bool exact = g.kind() == RadialFunction::Kind::PowerSum;
  // Generic profiles lose the bracket to rounding near tau = 1; there it is
  // continued by its leading (1 - tau)^2 behaviour.
  constexpr double kEpsCut = 1e-4;
  const double b_cut = exact ? 0.0 : pv_bracket(p, g, r, 1.0 - kEpsCut);
  auto near_one = [&](double eps) {
    double b;
    if (exact) {
      b = power_bracket(p, g, r, std::log1p(-eps));
    } else if (eps >= kEpsCut) {
      b = pv_bracket(p, g, r, 1.0 - eps);
    } else {
      b = b_cut * (eps / kEpsCut) * (eps / kEpsCut);
    }
    return b * kernel->value_near(eps);
  };
  auto near_zero = [&](double tau) { return pv_bracket(p, g, r, tau) * kernel->value(tau); };
  double integral;
  try {
    integral = quad::graded(near_one, 0.0, 0.5, true, rel_tol, 16) + quad::graded(near_zero, 0.0, 0.5, true, rel_tol, 16);
  } catch (const ConvergenceError&) {
    throw ConvergenceError("apply_pointwise: quadrature did not converge");
  }
  return normalization_constant(p) * std::pow(r, -s2) * integral;
}

namespace {

void require_sampled(const RadialFunction& g, const char* what) {
  if (g.kind() != RadialFunction::Kind::Sampled) {
    throw DomainError(std::string(what) + ": profile must be sampled and exterior-zero");
  }
}

// int over one element of F(r), with graded panels where F may be singular.
template <class F>
double element_integral(F&& f, double a, double b, bool first, bool last) {
  if (first) return quad::graded(f, a, b, true, 1e-13, 16);
  if (last) return quad::graded(f, a, b, false, 1e-13, 16);
  return quad::gauss(f, a, b, 16);
}

}  // namespace

double gagliardo_seminorm(const FracParams& p, const RadialFunction& g, double kappa, double q,
                          double weight_exponent) {
  require_sampled(g, "gagliardo_seminorm");
  if (!(q >= 1.0)) throw DomainError("gagliardo_seminorm: q must be >= 1");
  if (!(kappa > 0.0) || !(kappa < q)) throw DomainError("gagliardo_seminorm: need 0 < kappa < q");
  if (g.identically_zero()) return 0.0;
  const auto kernel = shared_angular_kernel(p.N(), kappa);
  const PairQuadrature pq(kernel, weight_exponent, q);
  const auto nodes = g.nodes();
  const std::size_t M = nodes.size() - 1;

  double interior = 0.0;
  for (std::size_t e = 0; e < M; ++e) {
    const double se = g.slope(e);
    for (std::size_t f = e; f < M; ++f) {
      const double sf = g.slope(f);
      const double c = nodes[f];
      double acc = 0.0;
      pq.visit_pair(nodes, e, f, [&](const PairPoint& pt) {
        double diff;
        if (f == e) {
          diff = se * pt.gap;
        } else if (f == e + 1) {
          diff = se * (c - pt.r) + sf * (pt.rho - c);
        } else {
          diff = g.eval_in(e, pt.r) - g.eval_in(f, pt.rho);
        }
        acc += std::pow(std::abs(diff), q) * pt.weight;
      });
      interior += acc;
    }
  }

  const ExteriorWeight ext(kernel, weight_exponent);
  const double expo = p.dim() - 1.0 - kappa - 2.0 * weight_exponent;
  double exterior = 0.0;
  for (std::size_t e = 0; e < M; ++e) {
    auto f = [&](double r) {
      const double v = std::abs(g.eval_in(e, r));
      if (v == 0.0) return 0.0;
      return std::pow(v, q) * std::pow(r, expo) * ext.value(r);
    };
    exterior += element_integral(f, nodes[e], nodes[e + 1], e == 0, e + 1 == M);
  }
  return sphere_area(p.N()) * (interior + 2.0 * exterior);
}

double radial_integral(const FracParams& p, const RadialFunction& g, double q, double weight_exponent) {
  require_sampled(g, "radial_integral");
  if (!(q > 0.0)) throw DomainError("radial_integral: q must be positive");
  const auto nodes = g.nodes();
  const std::size_t M = nodes.size() - 1;
  const double expo = p.dim() - 1.0 - weight_exponent;
  if (!(expo > -1.0) && g.values()[0] != 0.0) throw DomainError("radial_integral: weight not integrable at r = 0");
  double total = 0.0;
  for (std::size_t e = 0; e < M; ++e) {
    auto f = [&](double r) { return std::pow(std::abs(g.eval_in(e, r)), q) * std::pow(r, expo); };
    total += element_integral(f, nodes[e], nodes[e + 1], e == 0, false);
  }
  return sphere_area(p.N()) * total;
}

double hardy_quotient(const FracParams& p, const RadialFunction& g) {
  const double s2 = 2.0 * p.s();
  const double den = radial_integral(p, g, 2.0, s2);
  if (!(den > 0.0)) throw DomainError("hardy_quotient: profile is identically zero");
  return 0.5 * normalization_constant(p) * gagliardo_seminorm(p, g, s2, 2.0) / den;
}

std::pair<double, double> weighted_forms(const FracParams& p, const RadialFunction& v, double gamma) {
  if (!(gamma >= 0.0) || !(gamma < p.half_gap())) {
    throw DomainError("weighted_forms: gamma must lie in [0, (N-2s)/2)");
  }
  return {radial_integral(p, v, 2.0, 2.0 * gamma), gagliardo_seminorm(p, v, 2.0 * p.s(), 2.0, gamma)};
}

}  // namespace fhl
