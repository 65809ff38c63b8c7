#include "fhl/radial_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <thread>

#include "fhl/errors.hpp"
#include "fhl/quadrature.hpp"

namespace fhl {

int thread_count() {
  if (const char* env = std::getenv("FHL_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

RadialGrid build_grid(int M, double grading) {
  if (M < 16) throw DomainError("build_grid: M must be >= 16");
  if (!(grading >= 1.0 && grading <= 6.0)) throw DomainError("build_grid: grading must lie in [1, 6]");
  RadialGrid g;
  g.grading = grading;
  g.nodes.resize(static_cast<std::size_t>(M) + 1);
  for (int i = 0; i <= M; ++i) g.nodes[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i) / M, grading);
  g.nodes.back() = 1.0;
  return g;
}

RadialField::RadialField(RadialGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.nodes.size()) throw DomainError("RadialField: value count does not match the grid");
  for (double x : values) {
    if (!std::isfinite(x)) throw DomainError("RadialField: values must be finite");
  }
  values.back() = 0.0;
}

RadialField RadialField::from_unknowns(const RadialGrid& g, const Eigen::VectorXd& u) {
  std::vector<double> v(g.nodes.size(), 0.0);
  for (int i = 0; i < u.size(); ++i) v[static_cast<std::size_t>(i)] = u(i);
  return RadialField(g, std::move(v));
}

RadialField RadialField::sample(const RadialGrid& g, const RadialFunction& f) {
  std::vector<double> v(g.nodes.size(), 0.0);
  for (std::size_t i = 0; i + 1 < g.nodes.size(); ++i) v[i] = f(g.nodes[i]);
  return RadialField(g, std::move(v));
}

Eigen::VectorXd RadialField::unknowns() const {
  Eigen::VectorXd u(grid.M());
  for (int i = 0; i < grid.M(); ++i) u(i) = values[static_cast<std::size_t>(i)];
  return u;
}

RadialFunction RadialField::as_function() const { return RadialFunction::sampled(grid.nodes, values); }

double RadialField::max_value() const { return *std::max_element(values.begin(), values.end()); }

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged:
      return "converged";
    case Verdict::Diverged:
      return "diverged";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

namespace {

// Runs body(i) for i in [0, n) on up to thread_count() workers. Every index
// writes only its own output slot, so results do not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += workers) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// int_a^b F, graded toward a for the element touching the origin.
template <class F>
double element_quad(F&& f, double a, double b, bool at_origin) {
  if (b <= a) return 0.0;
  if (at_origin) return quad::graded(f, a, b, true, 1e-13, 16);
  return quad::gauss(f, a, b, 16);
}

// Breakpoints in [a, b] where f crosses the level `trunc`.
std::vector<double> truncation_breaks(const RadialFunction& f, double trunc, double a, double b) {
  std::vector<double> cuts{a, b};
  if (!std::isfinite(trunc)) return cuts;
  std::vector<double> samples;
  const double h = b - a;
  if (a == 0.0) {
    for (int j = 60; j >= 1; --j) samples.push_back(h * std::pow(0.5, j));
  } else {
    samples.push_back(a);
  }
  for (int j = 1; j <= 32; ++j) samples.push_back(a + h * j / 32.0);
  samples.back() = b;
  for (std::size_t j = 0; j + 1 < samples.size(); ++j) {
    double lo = samples[j];
    double hi = samples[j + 1];
    const bool above_lo = f(lo) > trunc;
    if (above_lo == (f(hi) > trunc)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((f(mid) > trunc) == above_lo) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    cuts.push_back(0.5 * (lo + hi));
  }
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

// (int g phi_left r^{N-1}, int g phi_right r^{N-1}) over element e with
// g = min(f, trunc) * extra(r).
template <class Extra>
std::array<double, 2> element_load(const RadialGrid& grid, int N, std::size_t e, const RadialFunction& f,
                                   double trunc, Extra&& extra) {
  const double a = grid.nodes[e];
  const double b = grid.nodes[e + 1];
  const double h = b - a;
  const auto cuts = truncation_breaks(f, trunc, a, b);
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const bool origin = cuts[c] == 0.0;
    for (int side = 0; side < 2; ++side) {
      auto g = [&](double r) {
        const double t = (r - a) / h;
        const double phi = side == 0 ? 1.0 - t : t;
        const double fv = std::min(f(r), trunc);
        if (fv == 0.0 || phi == 0.0) return 0.0;
        return fv * extra(r) * phi * std::pow(r, N - 1.0);
      };
      out[static_cast<std::size_t>(side)] += element_quad(g, cuts[c], cuts[c + 1], origin);
    }
  }
  return out;
}

struct Bands {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;  // off(i) couples i and i+1
};

Bands hardy_bands(const FracParams& p, const RadialGrid& grid, double k) {
  const int M = grid.M();
  const double N = p.dim();
  const double s2 = 2.0 * p.s();
  const double omega = sphere_area(p.N());
  Bands b{Eigen::VectorXd::Zero(M), Eigen::VectorXd::Zero(M)};
  for (int e = 0; e < M; ++e) {
    const double a = grid.node(e);
    const double c = grid.node(e + 1);
    const double h = c - a;
    auto weight = [&](double r) {
      if (std::isinf(k)) return std::pow(r, N - 1.0 - s2);
      return std::pow(r, N - 1.0) / (std::pow(r, s2) + 1.0 / k);
    };
    auto mom = [&](int which) {
      auto g = [&](double r) {
        const double t = (r - a) / h;
        const double u = 1.0 - t;
        const double phi2 = which == 0 ? u * u : (which == 1 ? u * t : t * t);
        return phi2 * weight(r);
      };
      return element_quad(g, a, c, e == 0);
    };
    const double m00 = omega * mom(0);
    const double m01 = omega * mom(1);
    const double m11 = omega * mom(2);
    b.diag(e) += m00;
    if (e + 1 < M) {
      b.diag(e + 1) += m11;
      b.off(e) += m01;
    }
  }
  return b;
}

Eigen::MatrixXd dense_from_bands(const Bands& b) {
  const Eigen::Index M = b.diag.size();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    H(i, i) = b.diag(i);
    if (i + 1 < M) {
      H(i, i + 1) = b.off(i);
      H(i + 1, i) = b.off(i);
    }
  }
  return H;
}

Eigen::VectorXd band_multiply(const Bands& b, const Eigen::VectorXd& x) {
  const Eigen::Index M = b.diag.size();
  Eigen::VectorXd y = b.diag.cwiseProduct(x);
  for (Eigen::Index i = 0; i + 1 < M; ++i) {
    y(i) += b.off(i) * x(i + 1);
    y(i + 1) += b.off(i) * x(i);
  }
  return y;
}

}  // namespace

DiscreteOperator::DiscreteOperator(const FracParams& p, RadialGrid grid, double k_reg)
    : params_(p), grid_(std::move(grid)), k_reg_(k_reg) {
  if (grid_.M() < 1) throw DomainError("assemble: empty grid");
  if (!(k_reg > 0.0)) throw DomainError("assemble: k_reg must be positive or infinite");
  const int M = grid_.M();
  const double s2 = 2.0 * p.s();
  const auto kernel = shared_angular_kernel(p.N(), s2);
  const PairQuadrature pq(kernel, 0.0, 2.0);
  const std::span<const double> nodes(grid_.nodes);

  // Interior double integral, one 4x4 local block per element pair e <= f.
  struct PairBlock {
    std::array<int, 4> idx{-1, -1, -1, -1};
    std::array<double, 16> val{};
  };
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(M) * (M + 1) / 2);
  for (int e = 0; e < M; ++e) {
    for (int f = e; f < M; ++f) pairs.emplace_back(e, f);
  }
  std::vector<PairBlock> blocks(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [e, f] = pairs[k];
    PairBlock& blk = blocks[k];
    const double a = nodes[e];
    const double he = nodes[e + 1] - a;
    const double c = nodes[f];
    const double hf = nodes[f + 1] - c;
    int n = 0;
    if (f == e) {
      blk.idx = {e, e + 1, -1, -1};
      n = 2;
    } else if (f == e + 1) {
      blk.idx = {e, e + 1, f + 1, -1};
      n = 3;
    } else {
      blk.idx = {e, e + 1, f, f + 1};
      n = 4;
    }
    std::array<double, 16> acc{};
    try {
      pq.visit_pair(nodes, static_cast<std::size_t>(e), static_cast<std::size_t>(f), [&](const PairPoint& pt) {
        std::array<double, 4> d{};
        if (n == 2) {
          d[0] = pt.gap / he;
          d[1] = -d[0];
        } else if (n == 3) {
          const double x = c - pt.r;
          const double y = pt.rho - c;
          d[0] = x / he;
          d[1] = y / hf - x / he;
          d[2] = -y / hf;
        } else {
          const double tr = (pt.r - a) / he;
          const double tp = (pt.rho - c) / hf;
          d[0] = 1.0 - tr;
          d[1] = tr;
          d[2] = tp - 1.0;
          d[3] = -tp;
        }
        for (int i = 0; i < n; ++i) {
          const double wi = pt.weight * d[static_cast<std::size_t>(i)];
          for (int j = i; j < n; ++j) acc[static_cast<std::size_t>(i * 4 + j)] += wi * d[static_cast<std::size_t>(j)];
        }
      });
    } catch (const ConvergenceError& err) {
      std::ostringstream msg;
      msg << "assemble: quadrature failed for element pair (" << e << ", " << f << "): " << err.what();
      throw ConvergenceError(msg.str());
    }
    blk.val = acc;
  });

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M, M);
  for (const auto& blk : blocks) {
    for (int i = 0; i < 4; ++i) {
      const int gi = blk.idx[static_cast<std::size_t>(i)];
      if (gi < 0 || gi >= M) continue;
      for (int j = i; j < 4; ++j) {
        const int gj = blk.idx[static_cast<std::size_t>(j)];
        if (gj < 0 || gj >= M) continue;
        const double v = blk.val[static_cast<std::size_t>(i * 4 + j)];
        if (gi == gj) {
          S(gi, gi) += (i == j ? 1.0 : 2.0) * v;
        } else {
          S(std::min(gi, gj), std::max(gi, gj)) += v;
        }
      }
    }
  }

  // Exterior coupling 2 int phi_i phi_j r^{N-1-2s} W(r) dr.
  const ExteriorWeight ext(kernel, 0.0);
  const double expo = p.dim() - 1.0 - s2;
  for (int e = 0; e < M; ++e) {
    const double a = grid_.node(e);
    const double b = grid_.node(e + 1);
    const double h = b - a;
    auto mom = [&](int which) {
      auto g = [&](double r) {
        const double t = (r - a) / h;
        const double u = 1.0 - t;
        const double phi2 = which == 0 ? u * u : (which == 1 ? u * t : t * t);
        return phi2 * std::pow(r, expo) * ext.value(r);
      };
      if (e + 1 == M) return quad::graded(g, a, b, false, 1e-13, 16);
      return element_quad(g, a, b, e == 0);
    };
    S(e, e) += 2.0 * mom(0);
    if (e + 1 < M) {
      S(e, e + 1) += 2.0 * mom(1);
      S(e + 1, e + 1) += 2.0 * mom(2);
    }
  }

  const double scale = 0.5 * normalization_constant(p) * sphere_area(p.N());
  A_ = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    for (int j = i; j < M; ++j) {
      A_(i, j) = scale * S(i, j);
      A_(j, i) = A_(i, j);
    }
  }
  H_ = dense_from_bands(hardy_bands(p, grid_, k_reg));
}

Eigen::MatrixXd DiscreteOperator::hardy(double k) const {
  if (k == k_reg_) return H_;
  return dense_from_bands(hardy_bands(params_, grid_, k));
}

Eigen::VectorXd DiscreteOperator::load(const RadialFunction& f, double trunc) const {
  const int M = grid_.M();
  const double omega = sphere_area(params_.N());
  if (f.kind() == RadialFunction::Kind::PowerSum && !(trunc < kInfinity)) {
    for (const auto& t : f.terms()) {
      if (t.coeff != 0.0 && !(t.exponent > -params_.dim())) {
        throw DomainError("load: data is not integrable against r^{N-1}");
      }
    }
  }
  Eigen::VectorXd F = Eigen::VectorXd::Zero(M);
  for (int e = 0; e < M; ++e) {
    const auto v = element_load(grid_, params_.N(), static_cast<std::size_t>(e), f, trunc, [](double) { return 1.0; });
    F(e) += omega * v[0];
    if (e + 1 < M) F(e + 1) += omega * v[1];
  }
  if (!F.allFinite()) throw DomainError("load: data is not integrable against r^{N-1}");
  return F;
}

Eigen::VectorXd DiscreteOperator::singular_load(const RadialFunction& h, double trunc, const Eigen::VectorXd& u,
                                                double sigma, double shift) const {
  const int M = grid_.M();
  const double omega = sphere_area(params_.N());
  Eigen::VectorXd F = Eigen::VectorXd::Zero(M);
  for (int e = 0; e < M; ++e) {
    const double a = grid_.node(e);
    const double b = grid_.node(e + 1);
    const double ua = u(e);
    const double ub = e + 1 < M ? u(e + 1) : 0.0;
    auto extra = [&](double r) {
      const double t = (r - a) / (b - a);
      return std::pow(ua * (1.0 - t) + ub * t + shift, -sigma);
    };
    const auto v = element_load(grid_, params_.N(), static_cast<std::size_t>(e), h, trunc, extra);
    F(e) += omega * v[0];
    if (e + 1 < M) F(e + 1) += omega * v[1];
  }
  return F;
}

DiscreteOperator assemble(const FracParams& p, const RadialGrid& grid, double k_reg) {
  return DiscreteOperator(p, grid, k_reg);
}

double rayleigh_minimum(const DiscreteOperator& op) {
  const Eigen::MatrixXd Hinf = op.hardy(kInfinity);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(op.A(), Hinf, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("rayleigh_minimum: generalized eigensolver failed");
  return es.eigenvalues()(0);
}

namespace {

double relative_change(const FracParams& p, const RadialGrid& g, const Eigen::VectorXd& prev,
                       const Eigen::VectorXd& cur) {
  const double den = lq_norm(p, RadialField::from_unknowns(g, cur), 2.0);
  if (den == 0.0) return prev.isZero(0.0) ? 0.0 : 1.0;
  return lq_norm(p, RadialField::from_unknowns(g, cur - prev), 2.0) / den;
}

void fill_standard_norms(const FracParams& p, const DiscreteOperator& op, SolveReport& rep) {
  const Eigen::VectorXd u = rep.field.unknowns();
  rep.energy = u.dot(op.A() * u);
  rep.hardy_integral = u.dot(op.hardy(kInfinity) * u);
  rep.norms["L1"] = lq_norm(p, rep.field, 1.0);
  rep.norms["L2"] = lq_norm(p, rep.field, 2.0);
  rep.norms["Linf"] = u.cwiseAbs().maxCoeff();
  rep.norms["energy"] = rep.energy;
  rep.norms["hardy_integral"] = rep.hardy_integral;
  try {
    rep.blowup_exponent = fit_blowup(rep.field, default_blowup_window(rep.field.grid));
    rep.norms["blowup_exponent"] = rep.blowup_exponent;
  } catch (const DomainError&) {
    // No positive values in the window; the fit is undefined.
  }
}

}  // namespace

SolveReport solve_discrete_limit(const DiscreteOperator& op, double lambda, const RadialFunction& f) {
  const FracParams& p = op.params();
  if (!(lambda >= 0.0)) throw DomainError("solve: lambda must be nonnegative");
  const Eigen::MatrixXd K = op.A() - lambda * op.hardy(kInfinity);
  const Eigen::VectorXd F = op.load(f);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw IndefiniteError("solve: A - lambda H is not positive definite on this mesh (lambda at or above the discrete Rayleigh minimum)");
  }
  Eigen::VectorXd u = llt.solve(F);
  const double fn = F.norm();
  if (fn > 0.0) {
    // One step of iterative refinement; the pencil is ill-conditioned near Lambda.
    u += llt.solve(F - K * u);
    const double res = (K * u - F).norm() / fn;
    if (res > 1e-10) throw ConvergenceError("solve: residual above 1e-10 relative");
  }
  SolveReport rep;
  rep.field = RadialField::from_unknowns(op.grid(), u);
  rep.verdict = Verdict::Converged;
  rep.criterion = "symmetric factorization";
  fill_standard_norms(p, op, rep);
  rep.norms["lambda"] = lambda;
  return rep;
}

SolveReport solve_linear_direct(const DiscreteOperator& op, double lambda, const RadialFunction& f) {
  const double Lambda = hardy_constant(op.params());
  if (!(lambda < Lambda)) throw DomainError("solve_linear_direct: lambda must be strictly below Lambda_{N,s}");
  return solve_discrete_limit(op, lambda, f);
}

SolveReport solve_linear_iterative(const DiscreteOperator& op, double lambda, const RadialFunction& f,
                                   const IterativeOptions& opt) {
  const FracParams& p = op.params();
  const RadialGrid& g = op.grid();
  if (!(lambda > 0.0)) throw DomainError("solve_linear_iterative: lambda must be positive");
  if (opt.k_max < 1) throw DomainError("solve_linear_iterative: k_max must be >= 1");
  Eigen::LLT<Eigen::MatrixXd> llt(op.A());
  if (llt.info() != Eigen::Success) throw IndefiniteError("solve_linear_iterative: stiffness matrix not positive definite");
  const int M = g.M();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(M);
  SolveReport rep;
  rep.criterion = "converged: relative L2 change < " + std::to_string(opt.change_tol) + "; diverged: L1 grows >= " +
                  std::to_string(opt.growth_factor) + "x over " + std::to_string(opt.growth_window) + " iterations";
  std::vector<double> l1;
  Eigen::VectorXd prev = u;
  for (int k = 1; k <= opt.k_max; ++k) {
    const Bands Hk = hardy_bands(p, g, static_cast<double>(k));
    const Eigen::VectorXd rhs = lambda * band_multiply(Hk, u) + op.load(f, static_cast<double>(k));
    const Eigen::VectorXd next = llt.solve(rhs);
    const RadialField field = RadialField::from_unknowns(g, next);
    IterationRecord rec;
    rec.step = k;
    rec.l1 = lq_norm(p, field, 1.0);
    rec.linf = next.cwiseAbs().maxCoeff();
    rec.change = relative_change(p, g, u, next);
    rep.history.push_back(rec);
    l1.push_back(rec.l1);
    prev = u;
    u = next;
    if (!u.allFinite()) {
      rep.verdict = Verdict::Diverged;
      break;
    }
    if (k > opt.growth_window) {
      const double before = l1[static_cast<std::size_t>(k - 1 - opt.growth_window)];
      if (before > 0.0 && rec.l1 >= opt.growth_factor * before) {
        rep.verdict = Verdict::Diverged;
        break;
      }
    }
    if (rec.change < opt.change_tol) {
      rep.verdict = Verdict::Converged;
      break;
    }
  }
  if (!u.allFinite()) u.setZero();
  if (rep.verdict == Verdict::Converged) {
    // H_k differs from H_inf by O(1/k) at every radius, so u_k = u + c/k + O(1/k^2);
    // the reported field is the first-order extrapolation of that sequence.
    const RadialField raw = RadialField::from_unknowns(g, u);
    rep.norms["L1_last_iterate"] = lq_norm(p, raw, 1.0);
    rep.norms["L2_last_iterate"] = lq_norm(p, raw, 2.0);
    const double k = static_cast<double>(rep.history.size());
    u += (k - 1.0) * (u - prev);
    rep.notes.push_back("field is the 1/k extrapolation u_k + (k-1)(u_k - u_{k-1}) of the converged iterates");
  }
  rep.field = RadialField::from_unknowns(g, u);
  fill_standard_norms(p, op, rep);
  rep.norms["iterations"] = static_cast<double>(rep.history.size());
  rep.norms["lambda"] = lambda;
  return rep;
}

SolveReport solve_linear_iterative(const FracParams& p, const RadialGrid& grid, double lambda,
                                   const RadialFunction& f, int k_max) {
  IterativeOptions opt;
  opt.k_max = k_max;
  return solve_linear_iterative(assemble(p, grid), lambda, f, opt);
}

SolveReport existence_probe(const FracParams& p, double lambda, double nu, const ProbeOptions& opt) {
  if (!(nu < p.dim())) throw DomainError("existence_probe: need nu < N so that f is integrable");
  if (opt.levels < 3) throw DomainError("existence_probe: need at least 3 refinement levels");
  const HardyCoupling hc = coupling(p, lambda);
  const RadialFunction f = RadialFunction::power(-nu);
  const double margin = p.dim() - hc.gamma - nu;
  SolveReport rep;
  rep.norms["gamma"] = hc.gamma;
  rep.norms["nu"] = nu;
  rep.norms["lambda"] = lambda;
  rep.norms["data_exponent_margin"] = margin;
  rep.norms["analytic_exists"] = margin > 0.0 ? 1.0 : 0.0;
  rep.criterion =
      "L1 norms of the discrete limit solutions on meshes M, 2M, 4M, ...: converged if the last increment is smaller "
      "in magnitude than the one before, diverged otherwise";
  std::vector<double> norms;
  std::unique_ptr<DiscreteOperator> finest;
  for (int level = 0; level < opt.levels; ++level) {
    const int M = opt.base_nodes << level;
    finest = std::make_unique<DiscreteOperator>(p, build_grid(M, opt.grading), kInfinity);
    SolveReport lvl = solve_discrete_limit(*finest, lambda, f);
    IterationRecord rec;
    rec.step = M;
    rec.l1 = lvl.norms["L1"];
    rec.linf = lvl.norms["Linf"];
    rec.change = norms.empty() ? 0.0 : (rec.l1 - norms.back()) / norms.back();
    rep.history.push_back(rec);
    norms.push_back(rec.l1);
    rep.field = lvl.field;
    rep.energy = lvl.energy;
    rep.hardy_integral = lvl.hardy_integral;
    rep.blowup_exponent = lvl.blowup_exponent;
  }
  const std::size_t n = norms.size();
  const double d_prev = norms[n - 2] - norms[n - 3];
  const double d_last = norms[n - 1] - norms[n - 2];
  rep.norms["increment_ratio"] = d_prev != 0.0 ? d_last / d_prev : 0.0;
  const bool diverging = d_last > 0.0 && d_last >= d_prev;
  rep.verdict = diverging ? Verdict::Diverged : Verdict::Converged;
  rep.label = diverging ? "fails" : "exists";
  rep.norms["numeric_exists"] = diverging ? 0.0 : 1.0;
  rep.norms["verdicts_agree"] = (diverging == !(margin > 0.0)) ? 1.0 : 0.0;
  if (opt.k_max > 0) {
    IterativeOptions io;
    io.k_max = opt.k_max;
    const SolveReport it = solve_linear_iterative(*finest, lambda, f, io);
    rep.notes.push_back(std::string("iterative scheme on the finest mesh: ") + to_string(it.verdict) + " after " +
                        std::to_string(it.history.size()) + " iterations");
    rep.norms["iterative_L1_final"] = it.norms.at("L1");
  }
  return rep;
}

SolveReport existence_probe(const FracParams& p, const RadialGrid& grid, double lambda, double nu) {
  ProbeOptions opt;
  opt.base_nodes = grid.M();
  opt.grading = grid.grading;
  return existence_probe(p, lambda, nu, opt);
}

std::pair<double, double> default_blowup_window(const RadialGrid& grid) {
  return {std::max(grid.node(std::min(5, grid.M())), 1e-3), 0.1};
}

double fit_blowup(const RadialField& field, std::pair<double, double> window) {
  const auto [lo, hi] = window;
  if (!(lo > 0.0) || !(hi < 0.5) || !(lo < hi)) throw DomainError("fit_blowup: window must lie inside (0, 0.5)");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const double r = field.grid.nodes[i];
    if (r < lo || r > hi) continue;
    const double u = field.values[i];
    if (!(u > 0.0)) throw DomainError("fit_blowup: field must be positive inside the window");
    const double x = std::log(r);
    const double y = std::log(u);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 8) throw DomainError("fit_blowup: fewer than 8 nodes inside the window");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -slope;
}

double lq_norm(const FracParams& p, const RadialField& field, double q, double weight_exponent) {
  if (!(q >= 1.0)) throw DomainError("lq_norm: q must be >= 1");
  const auto& nodes = field.grid.nodes;
  const double expo = p.dim() - 1.0 - weight_exponent;
  if (!(expo > -1.0)) throw DomainError("lq_norm: weight r^{N-1-w} not integrable at 0");
  double total = 0.0;
  for (std::size_t e = 0; e + 1 < nodes.size(); ++e) {
    const double a = nodes[e];
    const double b = nodes[e + 1];
    const double ua = field.values[e];
    const double ub = field.values[e + 1];
    if (ua == 0.0 && ub == 0.0) continue;
    auto g = [&](double r) {
      const double t = (r - a) / (b - a);
      const double v = std::abs(ua * (1.0 - t) + ub * t);
      return (q == 1.0 ? v : std::pow(v, q)) * std::pow(r, expo);
    };
    // Sign changes inside the element give a kink in |u|; split there.
    if ((ua < 0.0) != (ub < 0.0) && ua != 0.0 && ub != 0.0) {
      const double z = a + (b - a) * ua / (ua - ub);
      total += element_quad(g, a, z, a == 0.0) + quad::gauss(g, z, b, 16);
    } else {
      total += element_quad(g, a, b, a == 0.0);
    }
  }
  return std::pow(sphere_area(p.N()) * total, 1.0 / q);
}

bool lq_tail_diverges(const FracParams& p, const RadialField& field, double q, double weight_exponent) {
  if (field.grid.M() < 3) return false;
  const double r1 = field.grid.node(1);
  const double r2 = field.grid.node(2);
  const double u1 = std::abs(field.values[1]);
  const double u2 = std::abs(field.values[2]);
  if (!(u1 > 0.0) || !(u2 > 0.0)) return false;
  const double decay = -std::log(u2 / u1) / std::log(r2 / r1);  // u ~ r^{-decay}
  return !(p.dim() - weight_exponent - q * decay > 0.0);
}

const char* to_string(LambdaMode m) {
  switch (m) {
    case LambdaMode::BelowJ:
      return "belowJ";
    case LambdaMode::AtP:
      return "atP";
    case LambdaMode::AboveP:
      return "aboveP";
  }
  return "belowJ";
}

LambdaMode parse_lambda_mode(const std::string& s) {
  if (s == "belowJ") return LambdaMode::BelowJ;
  if (s == "atP") return LambdaMode::AtP;
  if (s == "aboveP") return LambdaMode::AboveP;
  throw DomainError("unknown lambda mode '" + s + "' (expected belowJ, atP or aboveP)");
}

SolveReport summability_experiment(const FracParams& p, double m, LambdaMode mode, double eps,
                                   int refinement_levels, const SummabilityOptions& opt) {
  const double lo = curve_left_endpoint(p);
  const double hi = curve_right_endpoint(p);
  if (!(m > lo && m < hi)) throw DomainError("summability: m must lie in (2N/(N+2s), N/(2s))");
  if (!(eps > 0.0 && eps <= 0.5)) throw DomainError("summability: eps must lie in (0, 0.5]");
  if (refinement_levels < 2) throw DomainError("summability: need at least 2 refinement levels");
  const double Lambda = hardy_constant(p);
  const double J = curve_J(p, m);
  const double P = curve_P(p, m);
  double lambda = 0.0;
  switch (mode) {
    case LambdaMode::BelowJ:
      lambda = 0.9 * J;
      break;
    case LambdaMode::AtP:
      lambda = P;
      break;
    case LambdaMode::AboveP:
      lambda = 1.05 * P;
      break;
  }
  SolveReport rep;
  if (lambda > Lambda) {
    rep.notes.push_back("mode conflict: requested lambda " + std::to_string(lambda / Lambda) +
                        " Lambda exceeds Lambda; capped at Lambda");
    rep.norms["mode_conflict"] = 1.0;
    lambda = Lambda;
  } else {
    rep.norms["mode_conflict"] = 0.0;
  }
  const double nu = (p.dim() - eps) / m;
  const double q = sobolev_exponents(p, m).first;
  const RadialFunction f = RadialFunction::power(-nu);
  rep.norms["lambda"] = lambda;
  rep.norms["lambda_frac"] = lambda / Lambda;
  rep.norms["J"] = J;
  rep.norms["P"] = P;
  rep.norms["nu"] = nu;
  rep.norms["m_star_star"] = q;
  rep.norms["gamma"] = coupling(p, lambda).gamma;
  rep.criterion = "bounded: last relative change of ||u||_{m**} < 5%; growing: every level grows >= 20%";
  std::vector<double> norms;
  for (int level = 0; level < refinement_levels; ++level) {
    const int M = opt.base_nodes << level;
    const DiscreteOperator op(p, build_grid(M, opt.grading), kInfinity);
    SolveReport lvl = solve_discrete_limit(op, lambda, f);
    const double nq = lq_norm(p, lvl.field, q);
    IterationRecord rec;
    rec.step = M;
    rec.l1 = lvl.norms["L1"];
    rec.linf = lvl.norms["Linf"];
    rec.change = norms.empty() ? 0.0 : (nq - norms.back()) / norms.back();
    rec.energy = nq;
    rep.history.push_back(rec);
    norms.push_back(nq);
    rep.field = lvl.field;
    rep.energy = lvl.energy;
    rep.hardy_integral = lvl.hardy_integral;
    rep.blowup_exponent = lvl.blowup_exponent;
  }
  bool all_grow = true;
  for (std::size_t i = 1; i < norms.size(); ++i) all_grow = all_grow && norms[i] >= 1.2 * norms[i - 1];
  const double last_change = std::abs(norms.back() - norms[norms.size() - 2]) / norms[norms.size() - 2];
  rep.norms["norm_m_star_star"] = norms.back();
  if (norms.size() >= 3) {
    // At lambda = P the divergence is logarithmic: ||u||^{m**} then gains a
    // roughly constant amount per level instead of a decaying one.
    const std::size_t k = norms.size();
    const double d_last = std::pow(norms[k - 1], q) - std::pow(norms[k - 2], q);
    const double d_prev = std::pow(norms[k - 2], q) - std::pow(norms[k - 3], q);
    rep.norms["power_increment_ratio"] = d_prev != 0.0 ? d_last / d_prev : 0.0;
  }
  rep.norms["last_relative_change"] = last_change;
  if (all_grow) {
    rep.label = "growing";
    rep.verdict = Verdict::Diverged;
  } else if (last_change < 0.05) {
    rep.label = "bounded";
    rep.verdict = Verdict::Converged;
  } else {
    rep.label = "inconclusive";
    rep.verdict = Verdict::Inconclusive;
  }
  const double gamma = rep.norms["gamma"];
  if (gamma > nu - 2.0 * p.s()) rep.norms["comparison_C"] = comparison_check(p, rep, lambda, nu);
  return rep;
}

double comparison_check(const FracParams& p, const SolveReport& report, double lambda, double nu) {
  const double gamma = coupling(p, lambda).gamma;
  const double beta = nu - 2.0 * p.s();
  if (!(gamma > beta)) throw DomainError("comparison_check: requires gamma > nu - 2s");
  const auto& nodes = report.field.grid.nodes;
  double C = kInfinity;
  for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
    const double r = nodes[i];
    const double shape = std::pow(r, -gamma) - std::pow(r, -beta);
    if (!(shape > 0.0)) continue;
    C = std::min(C, report.field.values[i] / shape);
  }
  return std::isfinite(C) ? C : 0.0;
}

double harnack_quotient(const FracParams& p, const RadialField& field, double lambda, double q, double r0) {
  const double N = p.dim();
  const double q_max = N / (N - 2.0 * p.s());
  if (!(q >= 1.0 && q < q_max)) throw DomainError("harnack_quotient: q must lie in [1, N/(N-2s))");
  if (!(r0 > 0.0 && 2.0 * r0 <= 1.0)) throw DomainError("harnack_quotient: need 0 < r0 <= 1/2");
  const double gamma = coupling(p, lambda).gamma;
  const auto& nodes = field.grid.nodes;
  const std::size_t n = nodes.size();
  // Nodal ground-state transform; the origin node copies r_1.
  std::vector<double> v(n);
  for (std::size_t i = 1; i < n; ++i) v[i] = std::pow(nodes[i], gamma) * field.values[i];
  v[0] = v[1];
  for (std::size_t i = 1; i < n && nodes[i] < 2.0 * r0; ++i) {
    if (!(v[i] > 0.0)) throw DomainError("harnack_quotient: field must be positive on (0, 2 r0)");
  }
  const double expo = N - 1.0 - 2.0 * gamma;
  double integral = 0.0;
  for (std::size_t e = 0; e + 1 < n && nodes[e] < r0; ++e) {
    const double a = nodes[e];
    const double b = nodes[e + 1];
    const double top = std::min(b, r0);
    auto g = [&](double r) {
      const double t = (r - a) / (b - a);
      return std::pow(v[e] * (1.0 - t) + v[e + 1] * t, q) * std::pow(r, expo);
    };
    integral += element_quad(g, a, top, e == 0);
  }
  const double omega = sphere_area(p.N());
  const double measure = omega * std::pow(r0, N - 2.0 * gamma) / (N - 2.0 * gamma);
  const double average = std::pow(omega * integral / measure, 1.0 / q);
  const std::size_t first = std::min<std::size_t>(5, n - 1);
  double vmin = kInfinity;
  for (std::size_t i = first; i < n && nodes[i] <= 1.5 * r0; ++i) vmin = std::min(vmin, v[i]);
  if (!std::isfinite(vmin)) {
    for (std::size_t i = 1; i < n && nodes[i] <= 1.5 * r0; ++i) vmin = std::min(vmin, v[i]);
  }
  if (!(vmin > 0.0) || !std::isfinite(vmin)) throw DomainError("harnack_quotient: no positive nodes in the infimum range");
  return average / vmin;
}

TruncationEnergies truncation_energies(const RadialField& field, double k, const DiscreteOperator& op) {
  if (!(k >= 0.0)) throw DomainError("truncation_energies: k must be nonnegative");
  const Eigen::VectorXd u = field.unknowns();
  const Eigen::VectorXd T = u.cwiseMin(k);
  const Eigen::VectorXd G = u - T;
  TruncationEnergies out;
  out.truncated = T.dot(op.A() * T);
  out.remainder = G.dot(op.A() * G);
  out.cross = G.dot(op.A() * u);
  return out;
}

namespace {

using FieldObserver = std::function<double(const RadialField&)>;

SolveReport run_semilinear(const DiscreteOperator& op, double lambda, double sigma, const RadialFunction& h,
                           const SemilinearOptions& opt, const FieldObserver& energy_of) {
  const FracParams& p = op.params();
  const RadialGrid& g = op.grid();
  if (!(sigma > 0.0)) throw DomainError("solve_semilinear: sigma must be positive");
  if (!(lambda >= 0.0) || lambda > hardy_constant(p)) throw DomainError("solve_semilinear: need 0 <= lambda <= Lambda");
  if (opt.n_max < 1) throw DomainError("solve_semilinear: n_max must be >= 1");
  const int M = g.M();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(M);
  SolveReport rep;
  rep.criterion = "inner damped fixed point: relative sup change < " + std::to_string(opt.inner_tol);
  double defect_max = 0.0;
  for (int step = 1; step <= opt.n_max; ++step) {
    const int n = opt.geometric ? 1 << (step - 1) : step;
    const double nn = static_cast<double>(n);
    const Eigen::MatrixXd K = op.A() - lambda * dense_from_bands(hardy_bands(p, g, nn));
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) throw IndefiniteError("solve_semilinear: A - lambda H_n not positive definite");
    Eigen::VectorXd w = u;
    bool done = false;
    for (int it = 0; it < opt.inner_cap; ++it) {
      const Eigen::VectorXd T = llt.solve(op.singular_load(h, nn, w, sigma, 1.0 / nn));
      const Eigen::VectorXd next = (1.0 - opt.damping) * w + opt.damping * T;
      if (next.minCoeff() < -1e-12) {
        throw ConvergenceError("solve_semilinear: iterate became negative (min " + std::to_string(next.minCoeff()) +
                               ")");
      }
      const double scale = next.cwiseAbs().maxCoeff();
      const double change = scale > 0.0 ? (next - w).cwiseAbs().maxCoeff() / scale : 0.0;
      w = next;
      if (change < opt.inner_tol) {
        done = true;
        break;
      }
    }
    if (!done) throw ConvergenceError("solve_semilinear: inner iteration hit the cap at n = " + std::to_string(n));
    const double prev_sup = u.cwiseAbs().maxCoeff();
    const double defect = step > 1 && prev_sup > 0.0 ? std::max(0.0, (u - w).maxCoeff()) / prev_sup : 0.0;
    defect_max = std::max(defect_max, defect);
    const RadialField field = RadialField::from_unknowns(g, w);
    IterationRecord rec;
    rec.step = n;
    rec.l1 = lq_norm(p, field, 1.0);
    rec.linf = w.cwiseAbs().maxCoeff();
    rec.change = relative_change(p, g, u, w);
    rec.energy = energy_of(field);
    rep.history.push_back(rec);
    u = w;
  }
  rep.field = RadialField::from_unknowns(g, u);
  fill_standard_norms(p, op, rep);
  rep.norms["monotonicity_defect"] = defect_max;
  rep.norms["lambda"] = lambda;
  rep.norms["sigma"] = sigma;
  double e_final = rep.history.back().energy;
  double e_max = 0.0;
  for (const auto& r : rep.history) e_max = std::max(e_max, r.energy);
  rep.norms["transformed_energy"] = e_final;
  rep.norms["transformed_energy_ratio"] = e_final > 0.0 ? e_max / e_final : 0.0;
  rep.norms["last_outer_change"] = rep.history.back().change;
  if (rep.history.size() >= 2) {
    const double e_prev = rep.history[rep.history.size() - 2].energy;
    rep.norms["transformed_energy_last_change"] = e_final > 0.0 ? std::abs(e_final - e_prev) / e_final : 0.0;
  }
  const bool finite = std::isfinite(e_final) && rep.energy < kInfinity;
  rep.verdict = finite ? Verdict::Converged : Verdict::Inconclusive;
  rep.label = finite ? "finite-energy" : "inconclusive";
  return rep;
}

}  // namespace

SolveReport solve_semilinear(const DiscreteOperator& op, double lambda, double sigma, const RadialFunction& h,
                             const SemilinearOptions& opt) {
  const double expo = 0.5 * (sigma + 1.0);
  return run_semilinear(op, lambda, sigma, h, opt, [&](const RadialField& field) {
    Eigen::VectorXd w = field.unknowns();
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::pow(std::max(w(i), 0.0), expo);
    return w.dot(op.A() * w);
  });
}

SolveReport solve_semilinear(const FracParams& p, const RadialGrid& grid, double lambda, double sigma,
                             const RadialFunction& h, int n_max) {
  SemilinearOptions opt;
  opt.n_max = n_max;
  return solve_semilinear(assemble(p, grid), lambda, sigma, h, opt);
}

double weighted_data_integral(const FracParams& p, const RadialFunction& h, double sigma, double gamma) {
  const double shift = (1.0 - sigma) * gamma;
  const double N = p.dim();
  if (h.kind() == RadialFunction::Kind::PowerSum) {
    double total = 0.0;
    for (const auto& t : h.terms()) {
      if (t.coeff == 0.0) continue;
      const double e = N + t.exponent - shift;
      if (!(e > 0.0)) return kInfinity;
      total += t.coeff / e;
    }
    return sphere_area(p.N()) * total;
  }
  auto g = [&](double r) { return h(r) * std::pow(r, N - 1.0 - shift); };
  try {
    return sphere_area(p.N()) * quad::graded(g, 0.0, 1.0, true, 1e-10, 16);
  } catch (const ConvergenceError&) {
    return kInfinity;
  }
}

SolveReport semilinear_weighted_probe(const DiscreteOperator& op, double lambda, double sigma,
                                      const RadialFunction& h, const SemilinearOptions& opt) {
  const FracParams& p = op.params();
  if (!(sigma > 0.0 && sigma < 1.0)) throw DomainError("semilinear_weighted_probe: sigma must lie in (0,1)");
  if (!(lambda < hardy_constant(p))) throw DomainError("semilinear_weighted_probe: lambda must be below Lambda");
  const double gamma = coupling(p, lambda).gamma;
  const double data = weighted_data_integral(p, h, sigma, gamma);
  const double expo = 0.5 * (sigma + 1.0);
  const double half_a = 0.5 * normalization_constant(p);
  SolveReport rep = run_semilinear(op, lambda, sigma, h, opt, [&](const RadialField& field) {
    std::vector<double> w(field.values.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::pow(std::pow(field.grid.nodes[i], gamma) * std::max(field.values[i], 0.0), expo);
    }
    w.back() = 0.0;
    return half_a * weighted_forms(p, RadialFunction::sampled(field.grid.nodes, w), gamma).second;
  });
  rep.norms["gamma"] = gamma;
  rep.norms["weighted_data_integral"] = data;
  rep.norms["data_integral_finite"] = std::isfinite(data) ? 1.0 : 0.0;
  if (!std::isfinite(data)) rep.notes.push_back("weighted data integral diverges");
  return rep;
}

}  // namespace fhl
