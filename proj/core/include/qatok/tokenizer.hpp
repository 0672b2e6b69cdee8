#pragma once

#include "qatok/corpus.hpp"
#include "qatok/vocabulary.hpp"

#include <span>
#include <unordered_map>
#include <vector>

namespace qatok {

/// Applies a trained vocabulary. Encoding repeatedly merges the adjacent
/// pair with the lowest merge rank, which replays the merges in learned
/// order; quality annotations play no part.
class Tokenizer {
 public:
  explicit Tokenizer(Vocabulary vocab);

  /// Throws Error naming the position of a symbol outside the base alphabet.
  std::vector<TokenId> encode(std::span<const SymbolId> symbols) const;
  std::vector<TokenId> encode(const AtomicSequence& seq) const { return encode(seq.elements); }

  /// Throws Error for an id outside the vocabulary.
  std::vector<SymbolId> decode(std::span<const TokenId> ids) const;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }

 private:
  struct Rule {
    std::size_t rank;
    TokenId new_id;
  };
  Vocabulary vocab_;
  std::unordered_map<TokenPair, Rule, TokenPairHash> ranks_;
  std::vector<std::vector<SymbolId>> expansions_;
};

}  // namespace qatok
