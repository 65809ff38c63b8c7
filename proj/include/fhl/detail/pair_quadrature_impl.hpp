#pragma once

// Template bodies of PairQuadrature; included from radial_kernel.hpp.

#include <algorithm>
#include <cmath>

#include "fhl/quadrature.hpp"

namespace fhl {

namespace detail {

inline int separated_order(double ratio) {
  if (ratio >= 16.0) return 4;
  if (ratio >= 6.0) return 6;
  if (ratio >= 3.0) return 8;
  if (ratio >= 1.5) return 10;
  return 12;
}

}  // namespace detail

template <class Visitor>
void PairQuadrature::visit_pair(std::span<const double> nodes, std::size_t e, std::size_t f, Visitor&& visit) const {
  const double a = nodes[e];
  const double b = nodes[e + 1];
  if (e == f) {
    identical(a, b, visit);
    return;
  }
  const double c = nodes[f];
  const double d = nodes[f + 1];
  box(a, b, c, d, 0, visit);
}

template <class Visitor>
void PairQuadrature::identical(double a, double b, Visitor& visit) const {
  const double h = b - a;
  const auto& rule_t = quad::gauss_legendre(10);
  const auto& rule_r = quad::gauss_legendre(12);
  const auto& rule_origin = quad::gauss_legendre(8);

  auto inner = [&](double t, double wt) {
    // r in [a, b - t], rho = r + t.
    const double hi = b - t;
    auto emit = [&](double lo, double up, const quad::Rule& rule) {
      const double len = up - lo;
      for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double r = lo + len * rule.x[i];
        const double rho = r + t;
        const double k = kernel_->pair_kernel(r, rho, t, w_);
        visit(PairPoint{r, rho, t, 2.0 * wt * len * rule.w[i] * k});
      }
    };
    if (a > 0.0) {
      emit(a, hi, rule_r);
      return;
    }
    // Element at the origin: the kernel varies on the scale t near r = 0.
    double outer = hi;
    const double floor = std::min(t, hi);
    while (outer * 0.25 > floor) {
      emit(0.25 * outer, outer, rule_origin);
      outer *= 0.25;
    }
    emit(0.0, outer, rule_r);
  };

  double outer = 1.0;
  for (int j = 0; j <= gap_panels_; ++j) {
    const double lo = j == gap_panels_ ? 0.0 : 0.25 * outer;
    const double len = (outer - lo) * h;
    for (std::size_t i = 0; i < rule_t.x.size(); ++i) {
      const double t = lo * h + len * rule_t.x[i];
      inner(t, len * rule_t.w[i]);
    }
    outer *= 0.25;
  }
}

template <class Visitor>
void PairQuadrature::box(double a, double b, double c, double d, int depth, Visitor& visit) const {
  const double he = b - a;
  const double hf = d - c;
  if (depth > 200) throw ConvergenceError("pair quadrature: subdivision depth exceeded");
  // Weighted kernels carry r^{-w} at the origin; grade toward it.
  if (a == 0.0 && w_ != 0.0 && depth < 48) {
    const double split = 0.25 * b;
    box(0.0, split, c, d, depth + 1, visit);
    box(split, b, c, d, depth + 1, visit);
    return;
  }
  if (b == c) {
    if (he > 2.0 * hf) {
      box(a, b - hf, c, d, depth + 1, visit);
      box(b - hf, b, c, d, depth + 1, visit);
      return;
    }
    if (hf > 2.0 * he) {
      box(a, b, c, c + he, depth + 1, visit);
      box(a, b, c + he, d, depth + 1, visit);
      return;
    }
    touching(a, b, d, visit);
    return;
  }
  const double dist = c - b;
  if (dist < he || dist < hf) {
    if (he >= hf) {
      const double mid = 0.5 * (a + b);
      box(a, mid, c, d, depth + 1, visit);
      box(mid, b, c, d, depth + 1, visit);
    } else {
      const double mid = 0.5 * (c + d);
      box(a, b, c, mid, depth + 1, visit);
      box(a, b, mid, d, depth + 1, visit);
    }
    return;
  }
  const int order_r = detail::separated_order(dist / he);
  const int order_rho = detail::separated_order(dist / hf);
  const auto& rr = quad::gauss_legendre(order_r);
  const auto& rp = quad::gauss_legendre(order_rho);
  for (std::size_t i = 0; i < rr.x.size(); ++i) {
    const double r = a + he * rr.x[i];
    for (std::size_t j = 0; j < rp.x.size(); ++j) {
      const double rho = c + hf * rp.x[j];
      // (rho - b) + (b - r) keeps the gap free of cancellation.
      const double gap = (rho - c) + dist + (b - r);
      const double k = kernel_->pair_kernel(r, rho, gap, w_);
      visit(PairPoint{r, rho, gap, 2.0 * he * hf * rr.w[i] * rp.w[j] * k});
    }
  }
}

template <class Visitor>
void PairQuadrature::touching(double a, double c, double d, Visitor& visit) const {
  // x = c - r in [0, X], y = rho - c in [0, Y]; Duffy split along x/X = y/Y.
  const double X = c - a;
  const double Y = d - c;
  const auto& rule_u = quad::gauss_legendre(8);
  const auto& rule_v = quad::gauss_legendre(12);
  double outer = 1.0;
  for (int j = 0; j <= duffy_panels_; ++j) {
    const double lo = j == duffy_panels_ ? 0.0 : 0.25 * outer;
    const double len = outer - lo;
    for (std::size_t i = 0; i < rule_u.x.size(); ++i) {
      const double u = lo + len * rule_u.x[i];
      const double wu = len * rule_u.w[i] * u * X * Y;
      for (std::size_t k = 0; k < rule_v.x.size(); ++k) {
        const double v = rule_v.x[k];
        const double w = 2.0 * wu * rule_v.w[k];
        {
          const double x = X * u;
          const double y = Y * u * v;
          const double r = c - x;
          const double rho = c + y;
          visit(PairPoint{r, rho, x + y, w * kernel_->pair_kernel(r, rho, x + y, w_)});
        }
        {
          const double x = X * u * v;
          const double y = Y * u;
          const double r = c - x;
          const double rho = c + y;
          visit(PairPoint{r, rho, x + y, w * kernel_->pair_kernel(r, rho, x + y, w_)});
        }
      }
    }
    outer *= 0.25;
  }
}

}  // namespace fhl
