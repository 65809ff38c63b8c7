#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fhl/errors.hpp"
#include "fhl/hardy_params.hpp"
#include "fhl/radial_kernel.hpp"

using namespace fhl;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// N = 3: the angular integral is elementary,
// D_kappa(tau) = 2 pi (|1-tau|^{-(1+kappa)} - (1+tau)^{-(1+kappa)}) / (tau (1+kappa)).
double d3_closed(double kappa, double tau) {
  return 2.0 * std::numbers::pi * (std::pow(std::abs(1.0 - tau), -(1.0 + kappa)) - std::pow(1.0 + tau, -(1.0 + kappa))) /
         (tau * (1.0 + kappa));
}

std::vector<double> graded_nodes(int M, double g) {
  std::vector<double> r(static_cast<std::size_t>(M) + 1);
  for (int i = 0; i <= M; ++i) r[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i) / M, g);
  r.back() = 1.0;
  return r;
}

RadialFunction sample(const std::vector<double>& nodes, const std::function<double(double)>& f) {
  std::vector<double> v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = f(nodes[i]);
  v.back() = 0.0;
  return RadialFunction::sampled(nodes, v);
}

// omega int_a^b (alpha + beta r)^2 r^p dr in closed form.
double shell_integral(int N, const std::vector<double>& x, const std::vector<double>& v, double p) {
  double total = 0.0;
  for (std::size_t e = 0; e + 1 < x.size(); ++e) {
    const double beta = (v[e + 1] - v[e]) / (x[e + 1] - x[e]);
    const double alpha = v[e] - beta * x[e];
    auto prim = [&](double r) {
      return alpha * alpha * std::pow(r, p + 1) / (p + 1) + 2 * alpha * beta * std::pow(r, p + 2) / (p + 2) +
             beta * beta * std::pow(r, p + 3) / (p + 3);
    };
    total += prim(x[e + 1]) - prim(x[e]);
  }
  return sphere_area(N) * total;
}

}  // namespace

TEST_CASE("angular kernel limits and special cases") {
  for (int N : {2, 3, 4, 5}) {
    const FracParams p(N, 0.4);
    CHECK(rel(angular_kernel_value(p, 0.8, 1e-8), sphere_area(N)) < 1e-7);
  }
  const FracParams p3(3, 0.5);
  for (double tau : {0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999, 1.0 - 1e-5, 1.0 + 1e-4, 1.5, 3.0}) {
    CAPTURE(tau);
    CHECK(rel(angular_kernel_value(p3, 1.0, tau), d3_closed(1.0, tau)) < 1e-9);
    CHECK(rel(angular_kernel_value(p3, 0.6, tau), d3_closed(0.6, tau)) < 1e-9);
  }
  CHECK_THROWS_AS(angular_kernel_value(p3, 1.0, 1.0), PoleError);
  CHECK_THROWS_AS(angular_kernel_value(p3, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(angular_kernel_value(p3, 1.0, -0.5), DomainError);
  CHECK_THROWS_AS(angular_kernel_value(p3, 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(AngularKernel(1, 0.5), DomainError);
}

TEST_CASE("angular kernel symmetry D(1/tau) = tau^{N+kappa} D(tau)") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> td(0.01, 0.99);
  for (const auto& p : {FracParams(2, 0.3), FracParams(3, 0.4), FracParams(4, 0.5), FracParams(5, 0.7)}) {
    for (double kappa : {2.0 * p.s(), 1.2}) {
      const auto table = shared_angular_kernel(p.N(), kappa);
      double worst_direct = 0.0;
      double worst_table = 0.0;
      for (int i = 0; i < 100; ++i) {
        const double tau = td(rng);
        const double scale = std::pow(tau, p.dim() + kappa);
        worst_direct = std::max(worst_direct, rel(angular_kernel_value(p, kappa, 1.0 / tau),
                                                  scale * angular_kernel_value(p, kappa, tau)));
        worst_table = std::max(worst_table, rel(table->value(1.0 / tau), scale * table->value(tau)));
      }
      CHECK(worst_direct < 1e-9);
      CHECK(worst_table < 1e-9);
    }
  }
}

TEST_CASE("tabulated kernel against closed form and direct quadrature") {
  const auto table = shared_angular_kernel(3, 0.8);
  const FracParams p(3, 0.4);
  for (double tau : {1e-4, 0.05, 0.5, 0.9, 0.999, 1.0 - 1e-6, 1.0 - 1e-8}) {
    CAPTURE(tau);
    CHECK(rel(table->value(tau), d3_closed(0.8, tau)) < 1e-8);
  }
  const auto table4 = shared_angular_kernel(4, 1.0);
  const FracParams p4(4, 0.5);
  for (double tau : {0.2, 0.95, 0.9999}) CHECK(rel(table4->value(tau), angular_kernel_value(p4, 1.0, tau)) < 1e-8);
  CHECK(table->value(0.999999) > table->value(0.99));
  CHECK(table->value(0.3) > 0.0);
  CHECK(shared_angular_kernel(3, 0.8) == table);
}

TEST_CASE("symbol: apply_pointwise on powers reproduces mu(beta)") {
  for (const auto& p : {FracParams(2, 0.3), FracParams(3, 0.4), FracParams(3, 0.5), FracParams(4, 0.5),
                        FracParams(5, 0.7)}) {
    const double span = p.dim() - 2.0 * p.s();
    CHECK(rel(apply_pointwise(p, RadialFunction::power(-p.half_gap()), 1.0), hardy_constant(p)) < 1e-6);
    for (int i = 1; i <= 9; ++i) {
      const double beta = 0.05 + (span - 0.1) * i / 10.0;
      const RadialFunction g = RadialFunction::power(-beta);
      std::vector<double> scaled;
      for (double r : {0.1, 0.5, 2.0}) scaled.push_back(apply_pointwise(p, g, r) * std::pow(r, beta + 2.0 * p.s()));
      const double mu = power_multiplier(p, beta);
      for (double v : scaled) CHECK(rel(v, mu) < 1e-6);
      CHECK(std::abs(scaled[0] - scaled[2]) < 1e-6 * mu);
    }
  }
  CHECK_THROWS_AS(apply_pointwise(FracParams(3, 0.5), RadialFunction::power(-0.5), 0.0), DomainError);
}

TEST_CASE("apply_pointwise is linear and reproduces the two-power comparison function") {
  const FracParams p(3, 0.4);
  const double gamma = coupling(p, 0.5 * hardy_constant(p)).gamma;
  const double nu = 1.0;
  const double beta = nu - 2.0 * p.s();
  const RadialFunction v = RadialFunction::power_sum({{1.0, -gamma}, {-1.0, -beta}});
  for (double r : {0.05, 0.3, 0.8}) {
    const double expected = power_multiplier(p, gamma) * std::pow(r, -gamma - 2.0 * p.s()) -
                            power_multiplier(p, beta) * std::pow(r, -nu);
    CHECK(rel(apply_pointwise(p, v, r), expected) < 1e-5);
    const RadialFunction a = RadialFunction::power(-0.3);
    const RadialFunction b = RadialFunction::power(-1.1, 2.5);
    const double lhs = apply_pointwise(p, a + b, r);
    const double rhs = apply_pointwise(p, a, r) + apply_pointwise(p, b, r);
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::abs(rhs));
  }
  // Constants are annihilated.
  CHECK(std::abs(apply_pointwise(p, RadialFunction::constant(3.0), 0.4)) < 1e-12);
}

TEST_CASE("folded bracket vanishes to second order at tau = 1") {
  const FracParams p(3, 0.4);
  const RadialFunction smooth = RadialFunction::callable([](double r) { return std::exp(-r * r); }, false);
  const RadialFunction power = RadialFunction::power(-0.7);
  for (const auto* g : {&smooth, &power}) {
    std::vector<double> ratios;
    for (int k = 2; k <= 6; ++k) {
      const double eps = std::pow(10.0, -k);
      ratios.push_back(pv_bracket(p, *g, 0.6, 1.0 - eps) / (eps * eps));
    }
    for (double q : ratios) CHECK(std::isfinite(q));
    for (std::size_t i = 1; i < ratios.size(); ++i) CHECK(rel(ratios[i], ratios.back()) < 0.05);
  }
}

TEST_CASE("gagliardo seminorm basic properties") {
  const FracParams p(3, 0.4);
  const auto nodes = graded_nodes(32, 2.0);
  const RadialFunction zero = sample(nodes, [](double) { return 0.0; });
  CHECK(gagliardo_seminorm(p, zero, 0.8, 2.0) == 0.0);
  const RadialFunction bump = sample(nodes, [](double r) { return std::cos(0.5 * std::numbers::pi * r); });
  for (double q : {1.5, 2.0, 3.0}) {
    const double base = gagliardo_seminorm(p, bump, 0.8, q);
    CHECK(base > 0.0);
    CHECK(rel(gagliardo_seminorm(p, bump.scaled(2.5), 0.8, q), std::pow(2.5, q) * base) < 1e-10);
  }
  CHECK_THROWS_AS(gagliardo_seminorm(p, bump, 2.0, 2.0), DomainError);
  CHECK_THROWS_AS(gagliardo_seminorm(p, RadialFunction::power(-0.3), 0.8, 2.0), DomainError);
}

TEST_CASE("gagliardo seminorm of a hat profile against a brute-force 2-D trapezoid") {
  // Oracle: 2000^2 trapezoid of the radial double integral (N = 3 closed-form kernel)
  // plus the exterior term by adaptive quadrature, computed offline.
  const FracParams p(3, 0.4);
  const RadialFunction hat = RadialFunction::sampled({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0});
  const double value = gagliardo_seminorm(p, hat, 0.8, 2.0);
  CHECK(rel(value, 68.84616141271025) < 0.01);
}

TEST_CASE("gagliardo seminorm is stable under quadrature refinement") {
  // Splitting every element leaves the profile unchanged but moves all quadrature points.
  const FracParams p(3, 0.4);
  const auto coarse = graded_nodes(24, 2.0);
  std::vector<double> fine;
  for (std::size_t i = 0; i + 1 < coarse.size(); ++i) {
    fine.push_back(coarse[i]);
    fine.push_back(0.5 * (coarse[i] + coarse[i + 1]));
  }
  fine.push_back(1.0);
  auto f = [](double r) { return (1.0 - r) * std::pow(r + 0.05, -0.6); };
  const RadialFunction g1 = sample(coarse, f);
  const RadialFunction g2s = sample(fine, [&](double r) { return g1(r); });
  for (double kappa : {0.8, 1.4}) {
    const double a = gagliardo_seminorm(p, g1, kappa, 2.0);
    const double b = gagliardo_seminorm(p, g2s, kappa, 2.0);
    CHECK(rel(a, b) < 1e-3);
  }
}

TEST_CASE("hardy quotient") {
  const FracParams p(3, 0.4);
  const double L = hardy_constant(p);
  const auto nodes = graded_nodes(192, 2.0);
  std::vector<double> quotients;
  for (double eps : {0.4, 0.2, 0.1}) {
    const double beta = p.half_gap() - eps;
    const RadialFunction g = sample(nodes, [&](double r) {
      const double rr = std::max(r, nodes[1]);
      return std::pow(rr, -beta) * (1.0 - r);
    });
    const double q = hardy_quotient(p, g);
    CHECK(q >= L * (1.0 - 1e-3));
    quotients.push_back(q);
  }
  CHECK(quotients[1] < quotients[0]);
  CHECK(quotients[2] < quotients[1]);
  const RadialFunction plateau = RadialFunction::sampled({0.0, 0.8, 0.9, 1.0}, {1.0, 1.0, 0.0, 0.0});
  const double qp = hardy_quotient(p, plateau);
  CHECK(std::isfinite(qp));
  CHECK(qp > L);
  const RadialFunction zero = RadialFunction::sampled({0.0, 1.0}, {0.0, 0.0});
  CHECK_THROWS_AS(hardy_quotient(p, zero), DomainError);
}

TEST_CASE("weighted forms") {
  const FracParams p(3, 0.4);
  const auto nodes = graded_nodes(32, 2.0);
  const RadialFunction v = sample(nodes, [](double r) { return 1.0 - r * r; });
  const auto [mass0, semi0] = weighted_forms(p, v, 0.0);
  CHECK(rel(mass0, radial_integral(p, v, 2.0, 0.0)) < 1e-10);
  CHECK(rel(semi0, gagliardo_seminorm(p, v, 0.8, 2.0)) < 1e-10);

  // Plateau on [0.3, 0.6] with linear ramps; the mass integral is a polynomial times a power.
  const std::vector<double> x = {0.0, 0.2, 0.3, 0.6, 0.7, 1.0};
  const std::vector<double> y = {0.0, 0.0, 2.0, 2.0, 0.0, 0.0};
  const RadialFunction shell = RadialFunction::sampled(x, y);
  for (double gamma : {0.1, 0.4, 0.7}) {
    const double expected = shell_integral(3, x, y, 2.0 - 2.0 * gamma);
    CHECK(rel(weighted_forms(p, shell, gamma).first, expected) < 1e-8);
  }
  // Weighted Poincare trend: seminorm/mass stays bounded below across shrinking bumps (diagnostic).
  double smallest = 1e300;
  for (double width : {0.8, 0.4, 0.2}) {
    const RadialFunction b = RadialFunction::sampled({0.0, 0.5 * width, width, 1.0}, {1.0, 1.0, 0.0, 0.0});
    const auto [m, sn] = weighted_forms(p, b, 0.2);
    smallest = std::min(smallest, sn / m);
  }
  CHECK(smallest > 0.0);
  CHECK_THROWS_AS(weighted_forms(p, v, p.half_gap()), DomainError);
}
