#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace qatok {

using SymbolId = std::uint32_t;
using TokenId = std::uint32_t;

struct TokenPair {
  TokenId left = 0;
  TokenId right = 0;

  friend bool operator==(const TokenPair&, const TokenPair&) = default;
  friend auto operator<=>(const TokenPair&, const TokenPair&) = default;
};

struct TokenPairHash {
  std::size_t operator()(const TokenPair& p) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(p.left) << 32) | p.right);
  }
};

/// Which aggregation a domain uses for token quality.
enum class Domain { genomics, finance };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view name);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data. `record()` is the zero-based record index, or -1.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long record = -1)
      : Error(what), record_(record) {}
  long record() const noexcept { return record_; }

 private:
  long record_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Deterministic child seed for a named subsystem.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

/// Worker count: hardware concurrency capped by QATOK_THREADS when set.
unsigned worker_threads();

/// CRC-32 of a byte range, as used in every checksummed artifact.
std::uint32_t crc32_of(std::string_view bytes);
std::string crc32_hex(std::string_view bytes);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace qatok
