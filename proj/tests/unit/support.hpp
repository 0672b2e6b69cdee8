#pragma once

#include "qatok/corpus.hpp"

#include <random>
#include <string_view>
#include <vector>

namespace qatok::testing {

/// Letters map to symbols by offset from 'A'; every element gets quality q.
inline AtomicSequence letters(std::string_view s, double q = 1.0) {
  AtomicSequence out;
  for (char c : s) {
    out.elements.push_back(static_cast<SymbolId>(c - 'A'));
    out.qualities.push_back(q);
  }
  return out;
}

inline AtomicSequence with_qualities(std::string_view s, std::vector<double> q) {
  auto out = letters(s);
  out.qualities = std::move(q);
  return out;
}

inline std::vector<AtomicSequence> random_corpus(std::mt19937_64& rng, std::size_t alphabet, std::size_t sequences,
                                                 std::size_t min_len, std::size_t max_len, double q_lo = 0.0,
                                                 double q_hi = 1.0) {
  std::uniform_int_distribution<SymbolId> sym(0, static_cast<SymbolId>(alphabet - 1));
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_real_distribution<double> q(q_lo, q_hi);
  std::vector<AtomicSequence> out(sequences);
  for (std::size_t s = 0; s < sequences; ++s) {
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      out[s].elements.push_back(sym(rng));
      out[s].qualities.push_back(q(rng));
    }
    out[s].source_id = "s" + std::to_string(s);
  }
  return out;
}

}  // namespace qatok::testing
