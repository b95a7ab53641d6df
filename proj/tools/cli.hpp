#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kinjump::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kToleranceFailure = 3,
  kOracleFailure = 4,
};

struct RunConfig {
  std::string subcommand;
  std::optional<double> a;  // physical slope
  double a_min = 0.0;
  double a_max = 5.0;
  int a_steps = 101;
  bool a_log = false;
  bool range_given = false;
  double U = 0.0;
  double g_T = 1.0;
  bool forcing_given = false;
  int panels = 72;
  int nodes = 16;
  int theta_samples = 1500;
  std::string variant = "corrected";
  int nx = 600;
  int n_mu = 96;
  double x_max = 30.0;
  std::string source = "analytic";
  std::string format = "csv";
  std::string out;
  std::optional<long> seed;
  bool verbose = false;

  /// The physical slopes requested, in order.
  std::vector<double> slopes() const;
};

/// Parses argv and runs the subcommand.  Tables go to `out` unless --out is
/// given; diagnostics go to `err`.  Returns one of ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Number of workers for a-sweeps: KINJUMP_THREADS if set and positive,
/// otherwise the hardware concurrency.
unsigned worker_count();

}  // namespace kinjump::cli
