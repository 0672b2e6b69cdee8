#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qatok {

double population_variance(std::span<const double> values);

/// Weight of one sequence: Var(q) + eps_base.
std::vector<double> sampling_weights(std::span<const std::vector<double>> qualities, double eps_base);

/// Weighted sampling without replacement of ceil(r N) sequences, weight
/// Var(q) + eps_base, by ranking exponential keys log(u)/w. Returns indices
/// in selection order (largest key first). Throws ConfigError for r outside
/// (0, 1] or a non-positive eps_base.
std::vector<std::size_t> stratified_sample(std::span<const std::vector<double>> qualities, double ratio,
                                           double eps_base, std::uint64_t seed);

struct Manifest {
  std::uint64_t seed = 0;
  double ratio = 1.0;
  double eps_base = 1e-6;
  std::size_t population = 0;
  std::vector<std::string> ids;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// `# qatok-manifest seed=.. r=.. eps_base=.. n=.. selected=..`, one id per
/// line, then `# checksum <crc32 hex>` over all preceding bytes.
std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(const std::string& text);

}  // namespace qatok
