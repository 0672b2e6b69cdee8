#include "qatok/sampler.hpp"

#include "qatok/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace qatok {

double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / n;
}

std::vector<double> sampling_weights(std::span<const std::vector<double>> qualities, double eps_base) {
  std::vector<double> w;
  w.reserve(qualities.size());
  for (const auto& q : qualities) w.push_back(population_variance(q) + eps_base);
  return w;
}

std::vector<std::size_t> stratified_sample(std::span<const std::vector<double>> qualities, double ratio,
                                           double eps_base, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("sampling ratio must lie in (0, 1]");
  if (!(eps_base > 0.0)) throw ConfigError("eps_base must be > 0");
  const std::size_t n = qualities.size();
  const auto m = std::min(n, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n))));
  const auto w = sampling_weights(qualities, eps_base);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = u(rng);
    while (x <= 0.0) x = u(rng);
    key[i] = std::log(x) / w[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  order.resize(m);
  return order;
}

std::string serialize_manifest(const Manifest& m) {
  std::string body = "# qatok-manifest seed=" + std::to_string(m.seed) + " r=" + format_double(m.ratio) +
                     " eps_base=" + format_double(m.eps_base) + " n=" + std::to_string(m.population) +
                     " selected=" + std::to_string(m.ids.size()) + "\n";
  for (const auto& id : m.ids) {
    if (id.empty() || id.find_first_of("\n\r") != std::string::npos || id[0] == '#')
      throw std::invalid_argument("manifest ids must be non-empty single lines not starting with '#'");
    body += id + "\n";
  }
  return body + "# checksum " + crc32_hex(body) + "\n";
}

Manifest parse_manifest(const std::string& text) {
  const auto pos = text.rfind("# checksum ");
  if (pos == std::string::npos) throw ParseError("manifest: missing checksum line");
  const std::string body = text.substr(0, pos);
  std::string tail = text.substr(pos + 11);
  while (!tail.empty() && tail.back() == '\n') tail.pop_back();
  if (tail != crc32_hex(body)) throw ParseError("manifest: checksum mismatch");

  std::istringstream in(body);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string hash, tag;
  hs >> hash >> tag;
  if (hash != "#" || tag != "qatok-manifest") throw ParseError("manifest: bad header");
  Manifest m;
  std::size_t selected = 0;
  std::string kv;
  auto as_uint = [](const std::string& v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ParseError("manifest: bad integer '" + v + "'");
    return x;
  };
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("manifest: bad header field '" + kv + "'");
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "seed") m.seed = as_uint(v);
    else if (k == "r") m.ratio = parse_double(v);
    else if (k == "eps_base") m.eps_base = parse_double(v);
    else if (k == "n") m.population = as_uint(v);
    else if (k == "selected") selected = as_uint(v);
    else throw ParseError("manifest: unknown header field '" + k + "'");
  }
  std::string line;
  while (std::getline(in, line)) m.ids.push_back(line);
  if (m.ids.size() != selected) throw ParseError("manifest: selected count disagrees with body");
  return m;
}

}  // namespace qatok
