#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fhl/hardy_params.hpp"
#include "fhl/radial_function.hpp"
#include "fhl/radial_kernel.hpp"

namespace fhl {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Nodes r_i = (i/M)^grading, i = 0..M.
struct RadialGrid {
  std::vector<double> nodes;
  double grading = 1.0;

  int M() const { return static_cast<int>(nodes.size()) - 1; }
  double node(int i) const { return nodes[static_cast<std::size_t>(i)]; }
};

RadialGrid build_grid(int M, double grading);

// Nodal values on a grid; the value at r = 1 is always 0.
struct RadialField {
  RadialGrid grid;
  std::vector<double> values;

  RadialField() = default;
  RadialField(RadialGrid g, std::vector<double> v);
  // From the M unknowns r_0..r_{M-1}; appends the Dirichlet zero.
  static RadialField from_unknowns(const RadialGrid& g, const Eigen::VectorXd& u);
  static RadialField sample(const RadialGrid& g, const RadialFunction& f);

  Eigen::VectorXd unknowns() const;
  RadialFunction as_function() const;
  double max_value() const;
};

enum class Verdict { Converged, Diverged, Inconclusive };
const char* to_string(Verdict v);

struct IterationRecord {
  int step = 0;
  double l1 = 0.0;
  double linf = 0.0;
  double change = 0.0;  // relative L2 change from the previous iterate
  double energy = 0.0;  // experiment-specific energy, 0 when unused
};

struct SolveReport {
  RadialField field;
  double blowup_exponent = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> norms;  // named norms and scalar diagnostics
  double energy = 0.0;                  // u^T A u
  double hardy_integral = 0.0;          // u^T H_inf u
  std::vector<IterationRecord> history;
  Verdict verdict = Verdict::Inconclusive;
  std::string label;      // experiment-level verdict word, e.g. "bounded" or "growing"
  std::string criterion;  // the rule that produced the verdict
  std::vector<std::string> notes;
};

// Galerkin forms on hat functions phi_0..phi_{M-1} (phi_M is removed by the
// Dirichlet condition). Immutable after assembly.
class DiscreteOperator {
 public:
  DiscreteOperator(const FracParams& p, RadialGrid grid, double k_reg);

  const FracParams& params() const { return params_; }
  const RadialGrid& grid() const { return grid_; }
  double k_reg() const { return k_reg_; }
  int size() const { return grid_.M(); }

  // (a/2) omega int int (phi_i(x)-phi_i(y))(phi_j(x)-phi_j(y)) |x-y|^{-N-2s}.
  const Eigen::MatrixXd& A() const { return A_; }
  // omega int phi_i phi_j r^{N-1}/(r^{2s}+1/k_reg).
  const Eigen::MatrixXd& H() const { return H_; }
  // The same Hardy matrix for another regularization level k (k = inf allowed).
  Eigen::MatrixXd hardy(double k) const;
  // F_i = omega int min(f, trunc) phi_i r^{N-1} dr.
  Eigen::VectorXd load(const RadialFunction& f, double trunc = kInfinity) const;
  // omega int h_n phi_i r^{N-1} / (u + 1/n)^sigma dr for the piecewise-linear u.
  Eigen::VectorXd singular_load(const RadialFunction& h, double trunc, const Eigen::VectorXd& u, double sigma,
                                double shift) const;

 private:
  FracParams params_;
  RadialGrid grid_;
  double k_reg_;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd H_;
};

DiscreteOperator assemble(const FracParams& p, const RadialGrid& grid, double k_reg = kInfinity);

// Smallest generalized eigenvalue of (A, H_inf).
double rayleigh_minimum(const DiscreteOperator& op);

// Solves (A - lambda H_inf) u = F for 0 < lambda < Lambda.
SolveReport solve_linear_direct(const DiscreteOperator& op, double lambda, const RadialFunction& f);
// Same discrete system without the strict lambda < Lambda requirement; this is
// the k -> inf limit of the iterative scheme on a fixed mesh.
SolveReport solve_discrete_limit(const DiscreteOperator& op, double lambda, const RadialFunction& f);

struct IterativeOptions {
  int k_max = 2000;
  double change_tol = 1e-6;
  double growth_factor = 10.0;
  int growth_window = 50;
};

// A u_k = lambda H_k u_{k-1} + F_k, f_k = min(f, k), u_0 = 0.
SolveReport solve_linear_iterative(const DiscreteOperator& op, double lambda, const RadialFunction& f,
                                   const IterativeOptions& opt = {});
SolveReport solve_linear_iterative(const FracParams& p, const RadialGrid& grid, double lambda,
                                   const RadialFunction& f, int k_max);

struct ProbeOptions {
  int base_nodes = 64;
  int levels = 3;
  double grading = 3.0;
  int k_max = 2000;
};

// f = r^{-nu}: analytic verdict of int r^{-gamma-nu} r^{N-1} dr against the
// mesh-refinement verdict for the discrete limit solutions.
SolveReport existence_probe(const FracParams& p, double lambda, double nu, const ProbeOptions& opt = {});
SolveReport existence_probe(const FracParams& p, const RadialGrid& grid, double lambda, double nu);

// Negated least-squares slope of log u against log r over the nodes in window.
double fit_blowup(const RadialField& field, std::pair<double, double> window);
std::pair<double, double> default_blowup_window(const RadialGrid& grid);

// (omega int |u|^q r^{N-1-w} dr)^{1/q} for the piecewise-linear field.
double lq_norm(const FracParams& p, const RadialField& field, double q, double weight_exponent = 0.0);
// True when the power law fitted through the first interior nodes makes
// int_0 |u|^q r^{N-1-w} dr diverge.
bool lq_tail_diverges(const FracParams& p, const RadialField& field, double q, double weight_exponent = 0.0);

enum class LambdaMode { BelowJ, AtP, AboveP };
const char* to_string(LambdaMode m);
LambdaMode parse_lambda_mode(const std::string& s);

struct SummabilityOptions {
  int base_nodes = 64;
  // Above P the m**-norm grows like 2^{g (gamma m** - N)/m**} per level; grading 6
  // keeps that above the 20% threshold for the default configuration.
  double grading = 6.0;
};

SolveReport summability_experiment(const FracParams& p, double m, LambdaMode mode, double eps,
                                   int refinement_levels, const SummabilityOptions& opt = {});

// Largest C with C (r^{-gamma} - r^{-(nu-2s)}) <= u at the interior nodes.
double comparison_check(const FracParams& p, const SolveReport& report, double lambda, double nu);

// L^q(dmu) average of v = r^gamma u over B_{r0} divided by min v on the nodes
// of [r_5, 3 r0 / 2].
double harnack_quotient(const FracParams& p, const RadialField& field, double lambda, double q, double r0);

struct TruncationEnergies {
  double truncated = 0.0;  // T_k(u)^T A T_k(u)
  double remainder = 0.0;  // G_k(u)^T A G_k(u)
  double cross = 0.0;      // G_k(u)^T A u
};
TruncationEnergies truncation_energies(const RadialField& field, double k, const DiscreteOperator& op);

struct SemilinearOptions {
  int n_max = 12;
  // Visit n = 1, 2, 4, ..., 2^{n_max-1} instead of n = 1..n_max.
  bool geometric = false;
  double damping = 0.5;
  double inner_tol = 1e-8;
  int inner_cap = 500;
};

// For n = 1..n_max: (A - lambda H_n) u_n = omega int h_n phi / (u_n + 1/n)^sigma.
SolveReport solve_semilinear(const DiscreteOperator& op, double lambda, double sigma, const RadialFunction& h,
                             const SemilinearOptions& opt = {});
SolveReport solve_semilinear(const FracParams& p, const RadialGrid& grid, double lambda, double sigma,
                             const RadialFunction& h, int n_max);

// omega int h r^{-(1-sigma) gamma} r^{N-1} dr; +inf when it diverges.
double weighted_data_integral(const FracParams& p, const RadialFunction& h, double sigma, double gamma);

SolveReport semilinear_weighted_probe(const DiscreteOperator& op, double lambda, double sigma,
                                      const RadialFunction& h, const SemilinearOptions& opt = {});

// Worker count from FHL_THREADS, else the hardware concurrency.
int thread_count();

}  // namespace fhl
