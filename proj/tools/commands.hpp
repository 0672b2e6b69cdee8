#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

namespace qatok::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitDiverged = 3;

struct Options {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

/// Runs one subcommand (train, encode, decode, inspect, eval, sample) and
/// maps failures to exit codes: 2 for invalid config or missing input, 3 for
/// training divergence, 1 for any other error.
int run_command(std::string_view command, const Options& opts, std::ostream& out, std::ostream& err);

}  // namespace qatok::cli
