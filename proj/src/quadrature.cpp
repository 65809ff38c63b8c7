#include "fhl/quadrature.hpp"

#include <array>
#include <numbers>

namespace fhl::quad {

namespace {

Rule build_rule(int n) {
  Rule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pn1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1,1] to [0,1], ascending.
    rule.x[n - 1 - i] = 0.5 * (x + 1.0);
    rule.w[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

}  // namespace

const Rule& gauss_legendre(int order) {
  static const std::array<Rule, kMaxOrder + 1> rules = [] {
    std::array<Rule, kMaxOrder + 1> r;
    for (int n = 1; n <= kMaxOrder; ++n) r[n] = build_rule(n);
    return r;
  }();
  if (order < 1 || order > kMaxOrder) throw DomainError("gauss_legendre: order out of range");
  return rules[order];
}

}  // namespace fhl::quad
