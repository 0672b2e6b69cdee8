#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

namespace qatok::cli {

/// One recognised config key. An empty fallback marks a key with no default.
struct ConfigKey {
  std::string_view name;
  std::string_view fallback;
  std::string_view help;
};

std::span<const ConfigKey> config_keys();

/// Default table rendered for `--help`.
std::string config_help();

/// Flat `section.key = value` file. `#` starts a comment; unknown keys,
/// duplicates and malformed lines raise ConfigError.
class Config {
 public:
  static Config parse(std::string_view text, std::string_view origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  void set(std::string_view key, std::string value);

  /// Value or documented default; ConfigError when neither exists.
  std::string str(std::string_view key) const;
  double real(std::string_view key) const;
  std::size_t count(std::string_view key) const;
  std::uint64_t u64(std::string_view key) const;
  bool flag(std::string_view key) const;
  /// Relative paths resolve against the config file's directory.
  std::filesystem::path path(std::string_view key) const;

  const std::filesystem::path& base_dir() const noexcept { return base_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
  std::filesystem::path base_;
};

}  // namespace qatok::cli
