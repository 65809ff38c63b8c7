#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "fhl/hardy_params.hpp"
#include "fhl/radial_function.hpp"

namespace fhl {

// D_kappa(tau) = |S^{N-2}| int_0^pi sin^{N-2}(t) (1 - 2 tau cos t + tau^2)^{-(N+kappa)/2} dt
// by adaptive quadrature, refined dyadically toward t = 0 when tau is near 1.
double angular_kernel_value(const FracParams& p, double kappa, double tau);

// Same integral with 1 - tau supplied directly so that tau = 1 - eps keeps
// full relative precision in eps.
double angular_kernel_near_one(int N, double kappa, double one_minus_tau);

// Tabulated D_kappa on (0,1), extended to tau > 1 by D(1/tau) = tau^{N+kappa} D(tau).
// The table stores log(D(tau) (1-tau)^{1+kappa}) on a grid uniform in
// x = log(1 - tau), x in [log 1e-8, 0]; interpolation is cubic Lagrange.
// Immutable after construction.
class AngularKernel {
 public:
  AngularKernel(int N, double kappa, int table_size = 2048);

  int N() const { return n_; }
  double kappa() const { return kappa_; }

  // D(tau) for tau in (0,1) given eps = 1 - tau.
  double value_near(double eps) const { return std::exp(log_value_near(eps)); }
  double log_value_near(double eps) const {
    const double x = std::log(eps);
    return log_regular(x) - (1.0 + kappa_) * x;
  }
  // D(tau) for any tau > 0, tau != 1.
  double value(double tau) const;

  // Symmetric radial kernel (r rho)^{N-1-w} R^{-N-kappa} D(min/max) with R = max(r, rho),
  // gap = |r - rho| supplied without cancellation.
  double pair_kernel(double r, double rho, double gap, double weight_exponent) const {
    const double R = r > rho ? r : rho;
    const double x = std::log(gap / R);
    const double log_k = (n_ - 1.0 - weight_exponent) * (std::log(r) + std::log(rho)) -
                         (n_ + kappa_) * std::log(R) + log_regular(x) - (1.0 + kappa_) * x;
    return std::exp(log_k);
  }

  // Interpolated log(D (1-tau)^{1+kappa}) at x = log(1 - tau) <= 0.
  double log_regular(double x) const;

  std::span<const double> grid_x() const { return x_; }

 private:
  int n_;
  double kappa_;
  double x_min_;
  double h_;
  std::vector<double> x_;
  std::vector<double> log_g_;
};

// Shared, lazily built tabulation for (N, kappa). Thread-safe.
std::shared_ptr<const AngularKernel> shared_angular_kernel(int N, double kappa);

// W_w(r) = int_0^r t^{kappa-1+w} D_kappa(t) dt on (0,1): the mass of the kernel
// that couples a point at radius r to the exterior of the unit ball.
// Stored as log(W (1-r)^kappa / r^{kappa+w}) on the kernel's x-grid.
class ExteriorWeight {
 public:
  ExteriorWeight(std::shared_ptr<const AngularKernel> kernel, double weight_exponent);

  double value(double r) const;
  double weight_exponent() const { return w_; }

 private:
  std::shared_ptr<const AngularKernel> kernel_;
  double w_;
  double x_min_;
  double h_;
  std::vector<double> log_q_;
};

// A quadrature point of the interior double integral over [0,1]^2.
// weight already contains the kernel and the factor 2 from the r <-> rho
// mirror image that is not visited.
struct PairPoint {
  double r;
  double rho;
  double gap;  // |r - rho| > 0
  double weight;
};

// Quadrature for double integrals
//   int int F(r, rho) k_w(r, rho) dr drho,  F(r,rho) = F(rho,r),  F ~ |r-rho|^q on the diagonal,
// over element pairs of a 1-D mesh on [0,1]. Identical pairs are integrated in
// (r, gap) coordinates with geometric grading in the gap; touching pairs use a
// Duffy split with geometric grading toward the shared node; separated pairs
// that are too close are subdivided until dist >= size.
class PairQuadrature {
 public:
  PairQuadrature(std::shared_ptr<const AngularKernel> kernel, double weight_exponent, double diff_exponent = 2.0);

  const AngularKernel& kernel() const { return *kernel_; }
  double weight_exponent() const { return w_; }

  // Visit all points of the element pair (e, f), e <= f, on `nodes`.
  template <class Visitor>
  void visit_pair(std::span<const double> nodes, std::size_t e, std::size_t f, Visitor&& visit) const;

 private:
  template <class Visitor>
  void identical(double a, double b, Visitor& visit) const;
  template <class Visitor>
  void box(double a, double b, double c, double d, int depth, Visitor& visit) const;
  template <class Visitor>
  void touching(double a, double c, double d, Visitor& visit) const;

  std::shared_ptr<const AngularKernel> kernel_;
  double w_;
  int gap_panels_;    // geometric panels for the identical-element gap variable
  int duffy_panels_;  // geometric panels for the touching-pair radial variable
};

// (-Delta)^s g at radius r through the folded principal value
//   a_{N,s} r^{-2s} int_0^1 [g(r)(tau^{N-1}+tau^{2s-1}) - g(r tau) tau^{N-1} - g(r/tau) tau^{2s-1}] D_{2s}(tau) dtau.
double apply_pointwise(const FracParams& p, const RadialFunction& g, double r, double rel_tol = 1e-9);

// The bracket of the folded integrand above at a single tau in (0,1).
double pv_bracket(const FracParams& p, const RadialFunction& g, double r, double tau);

// omega_{N-1} int r^{N-1-kappa-2w} int |g(r)-g(r tau)|^q tau^{N-1-w} D_kappa(tau) dtau dr
// for a sampled exterior-zero profile; w = 0 is the plain Gagliardo integral.
double gagliardo_seminorm(const FracParams& p, const RadialFunction& g, double kappa, double q,
                          double weight_exponent = 0.0);

// omega_{N-1} int_0^1 |g|^q r^{N-1-weight_exponent} dr for a sampled profile.
double radial_integral(const FracParams& p, const RadialFunction& g, double q, double weight_exponent);

double hardy_quotient(const FracParams& p, const RadialFunction& g);

// (int v^2 dmu, int int (v(x)-v(y))^2 dnu) with dmu = |x|^{-2 gamma} dx and
// dnu = |x-y|^{-N-2s} |x|^{-gamma} |y|^{-gamma} dx dy.
std::pair<double, double> weighted_forms(const FracParams& p, const RadialFunction& v, double gamma);

}  // namespace fhl

#include "fhl/detail/pair_quadrature_impl.hpp"
