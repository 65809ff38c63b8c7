#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fhl/errors.hpp"

// Fixed-order Gauss-Legendre rules and the deterministic composite schemes
// built on them. Panels are always visited in the same order, so results are
// bit-reproducible.
namespace fhl::quad {

inline constexpr int kMaxOrder = 64;

// Nodes and weights on [0,1].
struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

const Rule& gauss_legendre(int order);

template <class F>
double gauss(F&& f, double a, double b, int order) {
  const Rule& rule = gauss_legendre(order);
  const double h = b - a;
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) sum += rule.w[i] * f(a + h * rule.x[i]);
  return sum * h;
}

namespace detail {

template <class F>
double adaptive_step(F& f, double a, double b, double whole, int order, double tol, int depth, int max_depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss(f, a, mid, order);
  const double right = gauss(f, mid, b, order);
  const double refined = left + right;
  if (std::abs(refined - whole) <= tol) return refined;
  if (depth >= max_depth) throw ConvergenceError("adaptive quadrature: maximum bisection depth reached");
  return adaptive_step(f, a, mid, left, order, 0.5 * tol, depth + 1, max_depth) +
         adaptive_step(f, mid, b, right, order, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace detail

// Adaptive bisection comparing one panel against its two halves.
// The absolute target is max(abs_tol, rel_tol * |coarse estimate|).
template <class F>
double adaptive(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0, int order = 16,
                int max_depth = 60) {
  const double whole = gauss(f, a, b, order);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  return detail::adaptive_step(f, a, b, whole, order, tol, 0, max_depth);
}

// Integral over [a, b] of f, which may carry an integrable power-type
// singularity at `a` (toward_left = true) or at `b`. Panels shrink
// geometrically by `ratio` toward the singular endpoint; once the panel
// contributions decay geometrically the remaining tail is summed in closed
// form, which is exact for pure powers.
template <class F>
double graded(F&& f, double a, double b, bool toward_left, double rel_tol = 1e-13, int order = 16,
              double ratio = 0.25, int max_panels = 400) {
  const double length = b - a;
  if (length == 0.0) return 0.0;
  double total = 0.0;
  double previous = 0.0;
  double previous_rho = 0.0;
  double outer = 1.0;
  for (int j = 0; j < max_panels; ++j) {
    const double inner = outer * ratio;
    double lo, hi;
    if (toward_left) {
      lo = a + length * inner;
      hi = a + length * outer;
    } else {
      lo = b - length * outer;
      hi = b - length * inner;
    }
    const double panel = gauss(f, lo, hi, order);
    total += panel;
    if (j >= 3) {
      if (panel == 0.0) return total;
      const double rho = panel / previous;
      if (rho > 0.0 && rho < 0.99) {
        // The geometric tail is exact for a pure power; its error is driven
        // by the drift of the panel ratio.
        const double tail = panel * rho / (1.0 - rho);
        const double drift = std::abs(rho - previous_rho) / (1.0 - rho);
        if (std::abs(tail) * std::min(1.0, drift) <= rel_tol * std::abs(total)) return total + tail;
      }
      previous_rho = rho;
    }
    previous = panel;
    outer = inner;
    if (inner * length == 0.0 || (toward_left ? lo == a : hi == b)) return total;
  }
  throw ConvergenceError("graded quadrature: singular tail did not decay");
}

// Graded toward both ends of [a, b], split at the midpoint.
template <class F>
double graded_both(F&& f, double a, double b, double rel_tol = 1e-13, int order = 16) {
  const double mid = 0.5 * (a + b);
  return graded(f, a, mid, true, rel_tol, order) + graded(f, mid, b, false, rel_tol, order);
}

}  // namespace fhl::quad
