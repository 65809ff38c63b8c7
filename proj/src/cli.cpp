#include "fhl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "fhl/errors.hpp"
#include "fhl/hardy_params.hpp"
#include "fhl/radial_kernel.hpp"
#include "fhl/radial_solver.hpp"
#include "fhl/specfun.hpp"

#ifndef FHL_VERSION
#define FHL_VERSION "0.0.0"
#endif

namespace fhl::cli {

using nlohmann::ordered_json;

std::string version() { return FHL_VERSION; }

namespace {

struct CommandName {
  Command command;
  const char* name;
};

constexpr CommandName kCommands[] = {
    {Command::Constants, "constants"},   {Command::Curves, "curves"},
    {Command::Symbol, "symbol"},         {Command::KernelDump, "kernel-dump"},
    {Command::Solve, "solve"},           {Command::ProbeExistence, "probe-existence"},
    {Command::Summability, "summability"}, {Command::Harnack, "harnack"},
    {Command::Semilinear, "semilinear"}, {Command::Nonexistence, "nonexistence"},
    {Command::Sweep, "sweep"},
};

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string brief(double x) {
  std::ostringstream os;
  os << std::setprecision(8) << x;
  return os.str();
}

ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  return fmt(x);
}

double parse_real(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ParamError(what + ": cannot parse '" + text + "' as a number");
  }
  if (used != text.size()) throw ParamError(what + ": cannot parse '" + text + "' as a number");
  return v;
}

bool needs_lambda(Command c) {
  switch (c) {
    case Command::Solve:
    case Command::ProbeExistence:
    case Command::Harnack:
    case Command::Semilinear:
    case Command::Nonexistence:
      return true;
    default:
      return false;
  }
}

}  // namespace

const char* to_string(Command c) {
  for (const auto& e : kCommands) {
    if (e.command == c) return e.name;
  }
  return "?";
}

Command parse_command(const std::string& s) {
  for (const auto& e : kCommands) {
    if (s == e.name) return e.command;
  }
  throw ParamError("command: unknown command '" + s + "'");
}

RadialFunction parse_data(const std::string& spec) {
  // Split on '+' only where a new term starts, so exponents like 1e+2 survive.
  std::vector<std::string> terms;
  std::size_t start = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i] != '+') continue;
    const std::string rest = spec.substr(i + 1);
    if (rest.rfind("power:", 0) == 0 || rest.rfind("const:", 0) == 0) {
      terms.push_back(spec.substr(start, i - start));
      start = i + 1;
    }
  }
  terms.push_back(spec.substr(start));
  std::vector<RadialFunction::Term> parsed;
  for (const auto& t : terms) {
    if (t.rfind("power:", 0) == 0) {
      parsed.push_back({1.0, parse_real(t.substr(6), "data term '" + t + "'")});
    } else if (t.rfind("const:", 0) == 0) {
      parsed.push_back({parse_real(t.substr(6), "data term '" + t + "'"), 0.0});
    } else {
      throw ParamError("data: term '" + t + "' is neither power:p nor const:c");
    }
  }
  return RadialFunction::power_sum(std::move(parsed));
}

std::vector<std::pair<std::string, std::string>> RunConfig::resolved() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("command", to_string(command));
  kv.emplace_back("N", std::to_string(N));
  kv.emplace_back("s", fmt(s));
  if (lambda_resolved > 0.0) kv.emplace_back("lambda", fmt(lambda_resolved));
  switch (command) {
    case Command::Constants:
      kv.emplace_back("seed", std::to_string(seed));
      break;
    case Command::Curves:
      kv.emplace_back("m_points", std::to_string(m_points));
      break;
    case Command::Symbol:
      kv.emplace_back("beta", fmt(beta));
      break;
    case Command::KernelDump:
      kv.emplace_back("kappa", fmt(kappa.value_or(2.0 * s)));
      break;
    case Command::Solve:
    case Command::Nonexistence:
      kv.emplace_back("method", command == Command::Solve ? method : "iterative");
      kv.emplace_back("k_max", std::to_string(k_max));
      kv.emplace_back("f", f);
      break;
    case Command::ProbeExistence:
      kv.emplace_back("nu", fmt(nu.value_or(0.0)));
      kv.emplace_back("levels", std::to_string(levels));
      kv.emplace_back("k_max", std::to_string(k_max));
      break;
    case Command::Summability:
      kv.emplace_back("m", fmt(m.value_or(0.0)));
      kv.emplace_back("mode", mode);
      kv.emplace_back("eps", fmt(eps));
      kv.emplace_back("levels", std::to_string(levels));
      break;
    case Command::Harnack: {
      kv.emplace_back("f", f);
      kv.emplace_back("q", fmt(q));
      std::string list;
      for (double r : r0) list += (list.empty() ? "" : ",") + fmt(r);
      kv.emplace_back("r0", list);
      break;
    }
    case Command::Semilinear:
      kv.emplace_back("sigma", fmt(sigma));
      kv.emplace_back("h", h);
      kv.emplace_back("n_max", std::to_string(n_max));
      kv.emplace_back("geometric", geometric ? "true" : "false");
      break;
    case Command::Sweep:
      kv.emplace_back("jobs", jobs);
      break;
  }
  switch (command) {
    case Command::Solve:
    case Command::ProbeExistence:
    case Command::Summability:
    case Command::Harnack:
    case Command::Semilinear:
    case Command::Nonexistence:
      kv.emplace_back("nodes", std::to_string(nodes));
      kv.emplace_back("grade", fmt(grade));
      break;
    default:
      break;
  }
  kv.emplace_back("version", version());
  return kv;
}

namespace {

void validate(RunConfig& c) {
  std::optional<FracParams> p;
  try {
    p.emplace(c.N, c.s);
  } catch (const DomainError& e) {
    throw ParamError(std::string("--N/--s: ") + e.what());
  }
  const double Lambda = hardy_constant(*p);
  if (c.lambda && c.lambda_frac) throw ParamError("--lambda: give either --lambda or --lambda-frac, not both");
  if (needs_lambda(c.command) || c.lambda || c.lambda_frac) {
    double frac = c.command == Command::Nonexistence ? 1.2 : 0.5;
    if (c.lambda_frac) frac = *c.lambda_frac;
    c.lambda_resolved = c.lambda ? *c.lambda : frac * Lambda;
    const std::string flag = c.lambda ? "--lambda" : "--lambda-frac";
    if (!(c.lambda_resolved > 0.0) || !std::isfinite(c.lambda_resolved)) throw ParamError(flag + ": must be positive");
    const bool above_ok = c.command == Command::Nonexistence ||
                          (c.command == Command::Solve && c.method == "iterative");
    if (!above_ok && c.lambda_resolved > Lambda) throw ParamError(flag + ": must not exceed Lambda_{N,s}");
    if (c.command == Command::Solve && c.method == "direct" && !(c.lambda_resolved < Lambda)) {
      throw ParamError(flag + ": the direct solve needs lambda < Lambda_{N,s}");
    }
    if ((c.command == Command::Harnack || (c.command == Command::Semilinear && c.sigma < 1.0)) &&
        !(c.lambda_resolved < Lambda)) {
      throw ParamError(flag + ": this command needs lambda < Lambda_{N,s}");
    }
  }
  if (c.nodes < 16) throw ParamError("--nodes: must be >= 16");
  if (!(c.grade >= 1.0 && c.grade <= 6.0)) throw ParamError("--grade: must lie in [1, 6]");
  if (c.k_max < 1) throw ParamError("--k-max: must be >= 1");
  if (c.method != "direct" && c.method != "iterative") throw ParamError("--method: expected direct or iterative");
  parse_data(c.f);
  parse_data(c.h);
  const double N = p->dim();
  switch (c.command) {
    case Command::Curves:
      if (c.m_points < 2) throw ParamError("--m-points: must be >= 2");
      break;
    case Command::Symbol:
      if (!(c.beta > 0.0 && c.beta < N - 2.0 * c.s)) throw ParamError("--beta: must lie in (0, N-2s)");
      break;
    case Command::KernelDump:
      if (c.kappa && !(*c.kappa > 0.0)) throw ParamError("--kappa: must be positive");
      break;
    case Command::ProbeExistence:
      if (!c.nu) throw ParamError("--nu: required for probe-existence");
      if (!(*c.nu < N)) throw ParamError("--nu: must be below N so that f is integrable");
      if (c.levels < 3) throw ParamError("--levels: probe-existence needs at least 3");
      break;
    case Command::Summability: {
      if (!c.m) throw ParamError("--m: required for summability");
      if (!(*c.m > curve_left_endpoint(*p) && *c.m < curve_right_endpoint(*p))) {
        throw ParamError("--m: must lie in (2N/(N+2s), N/(2s))");
      }
      try {
        parse_lambda_mode(c.mode);
      } catch (const DomainError& e) {
        throw ParamError(std::string("--mode: ") + e.what());
      }
      if (!(c.eps > 0.0 && c.eps <= 0.5)) throw ParamError("--eps: must lie in (0, 0.5]");
      if (c.levels < 2) throw ParamError("--levels: summability needs at least 2");
      break;
    }
    case Command::Harnack:
      if (!(c.q >= 1.0 && c.q < N / (N - 2.0 * c.s))) throw ParamError("--q: must lie in [1, N/(N-2s))");
      if (c.r0.empty()) throw ParamError("--r0: at least one radius required");
      for (double r : c.r0) {
        if (!(r > 0.0 && r <= 0.5)) throw ParamError("--r0: radii must lie in (0, 1/2]");
      }
      break;
    case Command::Semilinear:
      if (!(c.sigma > 0.0)) throw ParamError("--sigma: must be positive");
      if (c.n_max < 1 || (c.geometric && c.n_max > 30)) throw ParamError("--n-max: out of range");
      break;
    case Command::Sweep:
      if (c.jobs.empty()) throw ParamError("--jobs: required for sweep");
      break;
    default:
      break;
  }
}

struct CommandDefaults {
  int nodes;
  double grade;
  int levels;
};

CommandDefaults defaults_for(Command c) {
  switch (c) {
    case Command::ProbeExistence:
      return {64, 3.0, 3};
    case Command::Summability:
      return {64, 6.0, 4};
    case Command::Semilinear:
      return {128, 3.0, 3};
    default:
      return {256, 3.0, 3};
  }
}

}  // namespace

std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& help_out) {
  RunConfig c;
  CLI::App app{"Fractional Hardy laboratory: constants, kernels, radial solves and experiments"};
  app.set_help_flag("--help", "print this help");
  app.set_version_flag("--version", version());
  std::string command;
  app.add_option("command", command,
                 "constants | curves | symbol | kernel-dump | solve | probe-existence | summability | harnack | "
                 "semilinear | nonexistence | sweep")
      ->required();
  app.add_option("--N", c.N, "spatial dimension (>= 2)");
  app.add_option("--s", c.s, "fractional order in (0,1)");
  app.add_option("--lambda", c.lambda, "coupling lambda");
  app.add_option("--lambda-frac", c.lambda_frac, "coupling as a fraction of Lambda_{N,s}");
  app.add_option("--m", c.m, "Lebesgue exponent of the data");
  app.add_option("--sigma", c.sigma, "exponent of the singular nonlinearity");
  app.add_option("--eps", c.eps, "data exponent offset in (0, 0.5]");
  app.add_option("--nu", c.nu, "data exponent, f = r^-nu");
  app.add_option("--beta", c.beta, "power for the symbol check");
  app.add_option("--kappa", c.kappa, "kernel exponent for kernel-dump (default 2s)");
  app.add_option("--mode", c.mode, "belowJ | atP | aboveP");
  auto* nodes_opt = app.add_option("--nodes", c.nodes, "mesh size M");
  auto* grade_opt = app.add_option("--grade", c.grade, "mesh grading exponent in [1, 6]");
  app.add_option("--f", c.f, "load, e.g. power:-0.5+const:1");
  app.add_option("--h", c.h, "semilinear datum, same syntax as --f");
  app.add_option("--method", c.method, "direct | iterative");
  app.add_option("--k-max", c.k_max, "iteration cap of the regularized scheme");
  auto* levels_opt = app.add_option("--levels", c.levels, "mesh refinement levels");
  app.add_option("--n-max", c.n_max, "outer steps of the semilinear scheme");
  app.add_flag("--geometric", c.geometric, "semilinear: n = 1, 2, 4, ... instead of 1..n_max");
  app.add_option("--q", c.q, "Harnack exponent in [1, N/(N-2s))");
  app.add_option("--r0", c.r0, "Harnack radii")->delimiter(',');
  app.add_option("--m-points", c.m_points, "number of m values for curves");
  app.add_option("--out", c.out, "output file (CSV for curves and kernel-dump, JSON report otherwise)");
  app.add_option("--profile", c.profile, "profile CSV (r,u,v) for solve-type commands");
  app.add_option("--jobs", c.jobs, "sweep: file with one argument line per run");
  app.add_flag("--check-quadrature", c.check_quadrature, "symbol: exit 3 if the quadrature misses mu(beta) by > 1e-5");
  app.add_flag("--assert", c.assert_verdict, "exit 4 when a verdict contradicts the expected one");
  app.add_flag("--record-timings", c.record_timings, "store wall-clock timings in JSON reports");
  app.add_option("--seed", c.seed, "seed of the randomized property sweep");
  app.set_config("--config", "", "flat key=value file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    help_out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForVersion&) {
    help_out << version() << "\n";
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    msg.erase(std::remove(msg.begin(), msg.end(), '\n'), msg.end());
    throw ParamError(msg);
  }
  c.command = parse_command(command);
  if (auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0) c.config_file = cfg->as<std::string>();
  const CommandDefaults d = defaults_for(c.command);
  if (nodes_opt->count() == 0) c.nodes = d.nodes;
  if (grade_opt->count() == 0) c.grade = d.grade;
  if (levels_opt->count() == 0) c.levels = d.levels;
  validate(c);
  return c;
}

namespace {

using Clock = std::chrono::steady_clock;

class Output {
 public:
  Output(const RunConfig& c) : config_(c), start_(Clock::now()) {}

  ordered_json config_json() const {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : config_.resolved()) j[k] = v;
    return j;
  }

  ordered_json report(const std::string& verdict) const {
    ordered_json j;
    j["config"] = config_json();
    j["verdict"] = verdict;
    j["norms"] = ordered_json::object();
    j["history"] = ordered_json::array();
    j["timings"] = ordered_json::object();
    return j;
  }

  void write_json(ordered_json j) const {
    if (config_.out.empty()) return;
    if (config_.record_timings) {
      j["timings"]["total_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    }
    std::ofstream os(config_.out);
    if (!os) throw ParamError("--out: cannot open '" + config_.out + "' for writing");
    os << j.dump(2) << "\n";
  }

  // CSV with a '#' preamble carrying the version and the resolved config.
  void write_csv(const std::string& path, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) const {
    if (path.empty()) return;
    std::ofstream os(path);
    if (!os) throw ParamError("output: cannot open '" + path + "' for writing");
    os << "# fhl " << version() << "\n";
    for (const auto& [k, v] : config_.resolved()) os << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        os << (i ? "," : "");
        if (!std::isnan(row[i])) os << fmt(row[i]);
      }
      os << "\n";
    }
  }

 private:
  const RunConfig& config_;
  Clock::time_point start_;
};

void fill_report(ordered_json& j, const SolveReport& rep) {
  j["verdict"] = rep.label.empty() ? to_string(rep.verdict) : rep.label;
  j["solver_verdict"] = to_string(rep.verdict);
  j["criterion"] = rep.criterion;
  for (const auto& [k, v] : rep.norms) j["norms"][k] = number(v);
  for (const auto& r : rep.history) {
    ordered_json h;
    h["step"] = r.step;
    h["l1"] = number(r.l1);
    h["linf"] = number(r.linf);
    h["change"] = number(r.change);
    h["energy"] = number(r.energy);
    j["history"].push_back(h);
  }
  j["notes"] = rep.notes;
}

std::vector<std::vector<double>> profile_rows(const RadialField& field, std::optional<double> gamma) {
  std::vector<std::vector<double>> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const double r = field.grid.nodes[i];
    const double u = field.values[i];
    const double v = gamma && r > 0.0 ? std::pow(r, *gamma) * u : nan;
    rows.push_back({r, u, v});
  }
  return rows;
}

int verdict_exit(const RunConfig& c, bool as_expected, std::ostream& err, const std::string& expected) {
  if (c.assert_verdict && !as_expected) {
    err << "assert: verdict differs from the expected " << expected << "\n";
    return kExitVerdict;
  }
  return kExitOk;
}

double m_alpha(const FracParams& p, double alpha) {
  const double N = p.dim();
  const double s = p.s();
  return std::exp((alpha + s) * std::log(2.0) + specfun::ln_gamma((N + 2 * s + 2 * alpha) / 4) -
                  specfun::ln_gamma((N - 2 * s - 2 * alpha) / 4));
}

int cmd_constants(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  const Output o(c);
  ordered_json j = o.report("ok");
  const double Lambda = hardy_constant(p);
  auto& n = j["norms"];
  n["Lambda"] = Lambda;
  n["a_Ns"] = normalization_constant(p);
  n["sphere_area"] = sphere_area(p.N());
  n["theta"] = curve_theta(p);
  n["m_left"] = curve_left_endpoint(p);
  n["m_right"] = curve_right_endpoint(p);
  std::ostringstream line;
  line << "constants: Lambda=" << brief(Lambda) << " a_Ns=" << brief(normalization_constant(p));
  if (c.lambda_resolved > 0.0) {
    const HardyCoupling hc = coupling(p, c.lambda_resolved);
    n["alpha"] = hc.alpha;
    n["gamma"] = hc.gamma;
    n["gamma_bar"] = hc.gamma_bar;
    n["critical_exponent"] = critical_exponent(p, c.lambda_resolved);
    line << " alpha=" << brief(hc.alpha) << " gamma=" << brief(hc.gamma);
  }
  // Randomized identity sweep driven by --seed.
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double product_dev = 0.0;
  double shift_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double alpha = p.half_gap() * (1e-6 + (1.0 - 2e-6) * unit(rng));
    const double lam = lambda_of_alpha(p, alpha);
    product_dev = std::max(product_dev, std::abs(lam - m_alpha(p, alpha) * m_alpha(p, -alpha)) / Lambda);
    shift_dev = std::max(shift_dev, std::abs(Lambda + ground_state_shift(p, p.half_gap() - alpha) - lam) / Lambda);
  }
  n["max_product_deviation"] = product_dev;
  n["max_shift_deviation"] = shift_dev;
  const bool ok = product_dev <= 1e-12 && shift_dev <= 1e-11;
  j["verdict"] = ok ? "ok" : "identity-violation";
  o.write_json(j);
  out << line.str() << " identities=" << (ok ? "ok" : "violated") << "\n";
  return verdict_exit(c, ok, err, "identities within 1e-12/1e-11");
}

int cmd_curves(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  const double lo = curve_left_endpoint(p);
  const double hi = curve_right_endpoint(p);
  std::vector<double> grid;
  for (int i = 0; i < c.m_points; ++i) grid.push_back(lo + (hi - lo) * i / c.m_points);
  const CurveComparison cc = curve_comparison(p, grid);
  std::vector<std::vector<double>> rows;
  int near_pole = 0;
  for (const auto& pt : cc.points) {
    rows.push_back({pt.m, pt.J, pt.P, pt.m_star_star, pt.m_star, pt.alpha0});
    near_pole += pt.near_pole ? 1 : 0;
  }
  const Output o(c);
  o.write_csv(c.out, {"m", "J", "P", "m_star_star", "m_star", "alpha0"}, rows);
  const bool ok = cc.J_le_P && cc.D_nondecreasing && cc.D_ge_theta;
  out << "curves: " << rows.size() << " points, J<=P " << (cc.J_le_P ? "yes" : "no") << ", D nondecreasing "
      << (cc.D_nondecreasing ? "yes" : "no") << ", D>=Theta " << (cc.D_ge_theta ? "yes" : "no")
      << ", near-pole points " << near_pole << "\n";
  return verdict_exit(c, ok, err, "J <= P with D nondecreasing and >= Theta");
}

int cmd_symbol(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  const double closed = power_multiplier(p, c.beta);
  const RadialFunction g = RadialFunction::power(-c.beta);
  double worst = 0.0;
  double at_one = 0.0;
  for (double r : {0.5, 1.0, 2.0}) {
    const double value = apply_pointwise(p, g, r) * std::pow(r, c.beta + 2.0 * c.s);
    if (r == 1.0) at_one = value;
    worst = std::max(worst, std::abs(value - closed) / closed);
  }
  const Output o(c);
  ordered_json j = o.report(worst <= 1e-5 ? "agree" : "disagree");
  j["norms"]["closed_form"] = closed;
  j["norms"]["quadrature"] = at_one;
  j["norms"]["relative_error"] = worst;
  o.write_json(j);
  out << "symbol: mu(" << brief(c.beta) << ") closed=" << fmt(closed) << " quadrature=" << fmt(at_one)
      << " rel_error=" << brief(worst) << "\n";
  if (c.check_quadrature && worst > 1e-5) {
    err << "symbol: quadrature misses the closed form by more than 1e-5\n";
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_kernel_dump(const RunConfig& c, std::ostream& out, std::ostream&) {
  const FracParams p(c.N, c.s);
  const double kappa = c.kappa.value_or(2.0 * c.s);
  const auto kernel = shared_angular_kernel(p.N(), kappa);
  const auto xs = kernel->grid_x();
  std::vector<std::vector<double>> rows;
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) {
    if (*it >= 0.0) continue;
    const double eps = std::exp(*it);
    rows.push_back({-std::expm1(*it), kernel->value_near(eps)});
  }
  const Output o(c);
  o.write_csv(c.out, {"tau", "D"}, rows);
  out << "kernel-dump: N=" << c.N << " kappa=" << brief(kappa) << " rows=" << rows.size() << "\n";
  return kExitOk;
}

std::optional<double> gamma_if_defined(const FracParams& p, double lambda) {
  if (lambda > hardy_constant(p)) return std::nullopt;
  return coupling(p, lambda).gamma;
}

int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  const RadialFunction f = parse_data(c.f);
  const DiscreteOperator op = assemble(p, build_grid(c.nodes, c.grade));
  SolveReport rep;
  if (c.method == "direct") {
    rep = solve_linear_direct(op, c.lambda_resolved, f);
  } else {
    IterativeOptions io;
    io.k_max = c.k_max;
    rep = solve_linear_iterative(op, c.lambda_resolved, f, io);
  }
  const auto gamma = gamma_if_defined(p, c.lambda_resolved);
  if (gamma) rep.norms["gamma"] = *gamma;
  const Output o(c);
  ordered_json j = o.report("");
  fill_report(j, rep);
  o.write_json(j);
  o.write_csv(c.profile, {"r", "u", "v"}, profile_rows(rep.field, gamma));
  out << "solve: " << to_string(rep.verdict) << " L2=" << brief(rep.norms.at("L2"))
      << " blowup=" << brief(rep.blowup_exponent);
  if (gamma) out << " gamma=" << brief(*gamma);
  out << "\n";
  const bool expect_converged = c.lambda_resolved < hardy_constant(p);
  const bool ok = rep.verdict == (expect_converged ? Verdict::Converged : Verdict::Diverged);
  return verdict_exit(c, ok, err, expect_converged ? "converged" : "diverged");
}

int cmd_probe(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  ProbeOptions po;
  po.base_nodes = c.nodes;
  po.grading = c.grade;
  po.levels = c.levels;
  po.k_max = c.k_max;
  const SolveReport rep = existence_probe(p, c.lambda_resolved, *c.nu, po);
  const Output o(c);
  ordered_json j = o.report("");
  fill_report(j, rep);
  o.write_json(j);
  o.write_csv(c.profile, {"r", "u", "v"}, profile_rows(rep.field, rep.norms.at("gamma")));
  const bool analytic = rep.norms.at("analytic_exists") > 0.5;
  const bool agree = rep.norms.at("verdicts_agree") > 0.5;
  out << "probe-existence: analytic=" << (analytic ? "exists" : "fails") << " numeric=" << rep.label
      << " increment_ratio=" << brief(rep.norms.at("increment_ratio")) << (agree ? " (agree)" : " (disagree)") << "\n";
  return verdict_exit(c, agree, err, analytic ? "exists" : "fails");
}

int cmd_summability(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  const LambdaMode mode = parse_lambda_mode(c.mode);
  SummabilityOptions so;
  so.base_nodes = c.nodes;
  so.grading = c.grade;
  const SolveReport rep = summability_experiment(p, *c.m, mode, c.eps, c.levels, so);
  const Output o(c);
  ordered_json j = o.report("");
  fill_report(j, rep);
  o.write_json(j);
  o.write_csv(c.profile, {"r", "u", "v"}, profile_rows(rep.field, rep.norms.at("gamma")));
  out << "summability: mode=" << c.mode << " lambda/Lambda=" << brief(rep.norms.at("lambda_frac"))
      << " verdict=" << rep.label << " growth per level:";
  for (std::size_t i = 1; i < rep.history.size(); ++i) out << " " << brief(100.0 * rep.history[i].change) << "%";
  out << "\n";
  const std::string expected = mode == LambdaMode::BelowJ ? "bounded" : "growing";
  bool ok = rep.label == expected;
  if (mode == LambdaMode::AboveP && rep.norms.contains("comparison_C")) ok = ok && rep.norms.at("comparison_C") > 0.0;
  return verdict_exit(c, ok, err, expected);
}

int cmd_harnack(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  const DiscreteOperator op = assemble(p, build_grid(c.nodes, c.grade));
  SolveReport rep = solve_linear_direct(op, c.lambda_resolved, parse_data(c.f));
  double lo = kInfinity;
  double hi = 0.0;
  out << "harnack:";
  for (double r0 : c.r0) {
    const double qv = harnack_quotient(p, rep.field, c.lambda_resolved, c.q, r0);
    rep.norms["quotient_r0=" + fmt(r0)] = qv;
    lo = std::min(lo, qv);
    hi = std::max(hi, qv);
    out << " Q(" << brief(r0) << ")=" << brief(qv);
  }
  rep.norms["quotient_band"] = hi / lo;
  const bool ok = hi / lo <= 2.0;
  rep.label = ok ? "bounded" : "unbounded";
  rep.criterion = "quotients at all radii within a factor 2";
  const double gamma = coupling(p, c.lambda_resolved).gamma;
  const Output o(c);
  ordered_json j = o.report("");
  fill_report(j, rep);
  o.write_json(j);
  o.write_csv(c.profile, {"r", "u", "v"}, profile_rows(rep.field, gamma));
  out << " band=" << brief(hi / lo) << "\n";
  return verdict_exit(c, ok, err, "bounded");
}

int cmd_semilinear(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  const DiscreteOperator op = assemble(p, build_grid(c.nodes, c.grade));
  SemilinearOptions so;
  so.n_max = c.n_max;
  so.geometric = c.geometric;
  const RadialFunction h = parse_data(c.h);
  const bool weighted = c.sigma < 1.0;
  const SolveReport rep = weighted ? semilinear_weighted_probe(op, c.lambda_resolved, c.sigma, h, so)
                                   : solve_semilinear(op, c.lambda_resolved, c.sigma, h, so);
  const Output o(c);
  ordered_json j = o.report("");
  fill_report(j, rep);
  o.write_json(j);
  o.write_csv(c.profile, {"r", "u", "v"}, profile_rows(rep.field, coupling(p, c.lambda_resolved).gamma));
  const double defect = rep.norms.at("monotonicity_defect");
  const double ratio = rep.norms.at("transformed_energy_ratio");
  out << "semilinear: sigma=" << brief(c.sigma) << " energy=" << brief(rep.norms.at("transformed_energy"))
      << " energy_ratio=" << brief(ratio) << " defect=" << brief(defect);
  if (weighted) out << " data_integral=" << brief(rep.norms.at("weighted_data_integral"));
  out << "\n";
  bool ok = defect <= 1e-6 && rep.verdict == Verdict::Converged;
  const double lam_frac = c.lambda_resolved / hardy_constant(p);
  const bool energy_class = c.sigma <= 1.0 || 4.0 * c.sigma / ((c.sigma + 1.0) * (c.sigma + 1.0)) > lam_frac;
  if (weighted && rep.norms.at("data_integral_finite") < 0.5) return verdict_exit(c, ok, err, "monotone iterates");
  if (energy_class) ok = ok && ratio <= 2.0;
  return verdict_exit(c, ok, err, "monotone iterates with bounded transformed energy");
}

int cmd_nonexistence(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FracParams p(c.N, c.s);
  const DiscreteOperator op = assemble(p, build_grid(c.nodes, c.grade));
  IterativeOptions io;
  io.k_max = c.k_max;
  const SolveReport rep = solve_linear_iterative(op, c.lambda_resolved, parse_data(c.f), io);
  const Output o(c);
  ordered_json j = o.report("");
  fill_report(j, rep);
  o.write_json(j);
  const double Lambda = hardy_constant(p);
  out << "nonexistence: lambda/Lambda=" << brief(c.lambda_resolved / Lambda) << " " << to_string(rep.verdict)
      << " after " << rep.history.size() << " iterations\n";
  const bool expect_diverged = c.lambda_resolved > Lambda;
  const bool ok = rep.verdict == (expect_diverged ? Verdict::Diverged : Verdict::Converged);
  return verdict_exit(c, ok, err, expect_diverged ? "diverged" : "converged");
}

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> words;
  for (std::string w; is >> w;) words.push_back(w);
  return words;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::ifstream in(c.jobs);
  if (!in) throw ParamError("--jobs: cannot read '" + c.jobs + "'");
  std::vector<RunConfig> runs;
  std::set<std::string> outputs;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto words = split_words(line);
    if (words.empty() || words[0][0] == '#') continue;
    std::ostringstream sink;
    std::optional<RunConfig> rc;
    try {
      rc = parse_config(words, sink);
    } catch (const ParamError& e) {
      throw ParamError("--jobs line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rc) continue;
    if (rc->command == Command::Sweep) throw ParamError("--jobs line " + std::to_string(line_no) + ": nested sweep");
    for (const auto& path : {rc->out, rc->profile}) {
      if (!path.empty() && !outputs.insert(path).second) {
        throw ParamError("--jobs line " + std::to_string(line_no) + ": output '" + path + "' used twice");
      }
    }
    runs.push_back(*rc);
  }
  std::vector<std::string> logs(runs.size());
  std::vector<int> codes(runs.size(), kExitOk);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), runs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < runs.size(); i += workers) {
        std::ostringstream o, e;
        codes[i] = run(runs[i], o, e);
        logs[i] = o.str() + e.str();
      }
    });
  }
  for (auto& th : pool) th.join();
  int code = kExitOk;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out << logs[i];
    code = std::max(code, codes[i]);
  }
  out << "sweep: " << runs.size() << " runs, worst exit code " << code << "\n";
  (void)err;
  return code;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::Constants:
        return cmd_constants(config, out, err);
      case Command::Curves:
        return cmd_curves(config, out, err);
      case Command::Symbol:
        return cmd_symbol(config, out, err);
      case Command::KernelDump:
        return cmd_kernel_dump(config, out, err);
      case Command::Solve:
        return cmd_solve(config, out, err);
      case Command::ProbeExistence:
        return cmd_probe(config, out, err);
      case Command::Summability:
        return cmd_summability(config, out, err);
      case Command::Harnack:
        return cmd_harnack(config, out, err);
      case Command::Semilinear:
        return cmd_semilinear(config, out, err);
      case Command::Nonexistence:
        return cmd_nonexistence(config, out, err);
      case Command::Sweep:
        return cmd_sweep(config, out, err);
    }
  } catch (const ParamError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParam;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParam;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitParam;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> config;
  try {
    config = parse_config(args, out);
  } catch (const ParamError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParam;
  }
  if (!config) return kExitOk;
  return run(*config, out, err);
}

}  // namespace fhl::cli
