#ifndef ANTIDOT_CONFIG_HPP
#define ANTIDOT_CONFIG_HPP

#include <antidot/fiber.hpp>
#include <antidot/potential.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace antidot {

/// Parse or range error in a run configuration. `line` is 0 when the problem
/// is not tied to a single line (missing keys, cross-key checks).
struct ConfigError : ValidationError {
  ConfigError(int line, const std::string& message);
  int line;
};

struct PotentialConfig {
  std::string shape;  ///< disk, square, annulus, grid, modes
  double r = 0;
  double a = 0;
  int N = 0;
  int width = 0;
  std::string path;
  double height = 1.0;
  bool normalized = false;
};

struct FiberConfig {
  double alpha = 1.0;
  double beta = 0.1;
  int M = 14;
  SolverKind solver = SolverKind::dense;
  double residual_tol = 1e-10;
  double memory_limit_mb = 2048;
  int bands = 8;
};

struct ScanConfig {
  int grid_n = 9;
  int refine_depth = 0;
  bool half_zone = false;
};

struct SweepConfig {
  std::vector<double> alphas{0.20, 0.25, 0.30, 0.35, 0.40};
  std::vector<double> betas{0.10, 0.15, 0.20, 0.25, 0.30};
  double cutoff_c = 4;  ///< M = max(cutoff_min, ceil(cutoff_c / alpha))
  int cutoff_min = 8;
  int dense_limit = 5000;
  double L = 0;                          ///< supercell side, m
  double mu = 0;                         ///< mass strength, J
  double hbar_vf = 1.054571817e-34 * 1e6;  ///< J m, v_F = 10^6 m/s
};

struct FeshbachConfig {
  double k1 = 0, k2 = 0;
  double z = 0;
};

struct KernelConfig {
  double r_min = 0.05;
  double r_max = 4.0;
  int samples = 200;
};

struct OutputConfig {
  std::string dir = "out";
  bool per_k_csv = true;
  std::uint64_t seed = 0;
};

struct RunConfig {
  PotentialConfig potential;
  FiberConfig fiber;
  ScanConfig scan;
  SweepConfig sweep;
  FeshbachConfig feshbach;
  KernelConfig kernel;
  OutputConfig output;
};

/// Sectioned `key = value` text; `#` and `;` start comments. Unknown
/// sections or keys, duplicates, type mismatches and range violations raise
/// ConfigError with the offending line. Relative `path` values are resolved
/// against `base_dir` when it is non-empty.
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");

RunConfig load_config(const std::string& path);

using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

/// Every key with its resolved value, section by section in declaration order.
std::vector<std::pair<std::string, std::vector<std::pair<std::string, ConfigValue>>>> config_echo(
    const RunConfig& config);

/// The mass profile described by [potential].
MassProfile build_profile(const PotentialConfig& config);

}  // namespace antidot

#endif
