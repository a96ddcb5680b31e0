#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nonrev::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Everything a run depends on, after flags, config file and NONREV_SEED
/// have been merged. Zero/empty fields mean "use the subcommand default".
struct RunConfig {
  std::string command;
  std::string potential = "gauss";
  std::vector<double> d_diag;
  std::vector<double> d_matrix;
  double a = 1.0;
  int dim = 0;
  std::vector<std::string> torus_coeffs;
  std::vector<std::string> drifts;
  double skew = 1.0;
  std::vector<double> skew_matrix;
  std::vector<double> ks;
  double stream_amp = 1.0;
  double h = 0.0;
  long steps = 0;
  std::vector<double> snapshots;
  int chains = 0;
  std::vector<double> x0;
  double spread = 0.0;
  std::uint64_t seed = 1;
  int grid = 0;
  std::vector<double> box;
  int bins = 0;
  int threads = 0;
  std::string out_dir = "out";
  bool plot = false;

  /// key=value lines of every field that can change the numbers; the
  /// output directory, plotting and thread count are left out.
  std::string canonical() const;
};

/// Parses argv (argv[0] is the program name). Exit code per kExit*; on
/// failure one JSON line goes to `err` and no file is written.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace nonrev::cli
