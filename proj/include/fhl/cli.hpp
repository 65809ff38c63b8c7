#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fhl/radial_function.hpp"

namespace fhl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParam = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitVerdict = 4;

// Bad command line, config file entry or parameter value.
class ParamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command {
  Constants,
  Curves,
  Symbol,
  KernelDump,
  Solve,
  ProbeExistence,
  Summability,
  Harnack,
  Semilinear,
  Nonexistence,
  Sweep,
};

const char* to_string(Command c);
Command parse_command(const std::string& s);

struct RunConfig {
  Command command = Command::Constants;
  int N = 3;
  double s = 0.5;
  std::optional<double> lambda;
  std::optional<double> lambda_frac;
  double lambda_resolved = 0.0;  // filled by validation; 0 when the command has no lambda
  std::optional<double> m;
  double sigma = 1.0;
  double eps = 0.2;
  std::optional<double> nu;
  double beta = 0.7;
  std::optional<double> kappa;
  std::string mode = "belowJ";
  int nodes = 128;
  double grade = 3.0;
  std::string f = "const:1";
  std::string h = "const:1";
  std::string method = "direct";
  int k_max = 2000;
  int levels = 4;
  int n_max = 12;
  bool geometric = false;
  double q = 1.0;
  std::vector<double> r0 = {0.2, 0.1, 0.05, 0.025};
  int m_points = 64;
  std::string out;
  std::string profile;
  std::string jobs;
  bool check_quadrature = false;
  bool assert_verdict = false;
  bool record_timings = false;
  std::uint64_t seed = 1;
  std::string config_file;

  // Resolved key/value pairs embedded in every output file, in a fixed order.
  std::vector<std::pair<std::string, std::string>> resolved() const;
};

// Parses "power:p", "const:c" and their sums joined by '+'.
RadialFunction parse_data(const std::string& spec);

// Arguments exclude the program name. Throws ParamError naming the offending
// parameter; returns std::nullopt when help was requested.
std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& help_out);

// Executes the command, writes its outputs and prints one summary line to `out`.
// Returns one of the exit codes above.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// parse_config + run with error-to-exit-code mapping.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace fhl::cli
