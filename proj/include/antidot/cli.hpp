#ifndef ANTIDOT_CLI_HPP
#define ANTIDOT_CLI_HPP

#include <antidot/config.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace antidot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;      ///< validation, config and usage errors
inline constexpr int kExitNumerical = 3;  ///< a numerical contract was not met

const std::vector<std::string>& subcommands();
std::string usage();

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::optional<std::string> out_dir;  ///< overrides [output].dir
  int threads = 1;                     ///< 0 = hardware concurrency
  std::optional<std::uint64_t> seed;   ///< overrides [output].seed
};

/// Runs one subcommand and writes its artifacts plus manifest.json into the
/// output directory. Returns the exit status; errors are reported on `err`.
int dispatch(const Invocation& inv, const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full command line: `antidot <subcommand> --config FILE [--out DIR] [--threads N] [--seed S]`.
/// `selftest` needs no config.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// The quick example suite; one PASS/FAIL line per check.
int selftest(std::ostream& out, std::uint64_t seed);

}  // namespace antidot::cli

#endif
