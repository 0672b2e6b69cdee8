#pragma once

#include "qatok/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace qatok {

struct MergeRule {
  TokenId left = 0;
  TokenId right = 0;
  TokenId new_id = 0;
  double quality = 0.0;  // aggregated q_t of the new token when it was created

  friend bool operator==(const MergeRule&, const MergeRule&) = default;
};

/// Base alphabet plus an ordered merge table. Token ids below base_size are
/// base symbols; merge i creates id base_size + i.
struct Vocabulary {
  std::size_t base_size = 0;
  Domain domain = Domain::genomics;
  double alpha = 0.0;
  double eps_f = 1e-8;
  double eps_q = 1e-8;
  std::vector<MergeRule> merges;

  std::size_t size() const noexcept { return base_size + merges.size(); }
  /// Length in atomic units.
  std::uint32_t token_length(TokenId t) const;
  std::vector<std::uint32_t> token_lengths() const;
  /// Atomic symbols spanned by each token.
  std::vector<std::vector<SymbolId>> expansions() const;

  /// Throws std::invalid_argument on a broken id/topology/quality invariant.
  void validate() const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

/// Writes the versioned text format:
///   qatok-vocab v1 base=<n> merges=<k> alpha=<a> domain=<d> eps_f=<e> eps_q=<e>
///   <a-id> <b-id> <new-id> <q_t>        (one line per merge)
///   checksum <crc32 hex of all preceding bytes>
std::string serialize(const Vocabulary& v);
void write_vocabulary(std::ostream& out, const Vocabulary& v);

/// Inverse of serialize. Throws ParseError (record = merge line index when
/// applicable) on format, checksum or invariant violations.
Vocabulary parse_vocabulary(const std::string& text);
Vocabulary read_vocabulary(std::istream& in);

}  // namespace qatok
