#include "qatok/tokenizer.hpp"

#include <limits>
#include <string>

namespace qatok {

Tokenizer::Tokenizer(Vocabulary vocab) : vocab_(std::move(vocab)) {
  vocab_.validate();
  for (std::size_t i = 0; i < vocab_.merges.size(); ++i) {
    const auto& m = vocab_.merges[i];
    // A repeated pair can only ever fire at its first rank.
    ranks_.try_emplace(TokenPair{m.left, m.right}, Rule{i, m.new_id});
  }
  expansions_ = vocab_.expansions();
}

std::vector<TokenId> Tokenizer::encode(std::span<const SymbolId> symbols) const {
  std::vector<TokenId> toks(symbols.begin(), symbols.end());
  for (std::size_t i = 0; i < toks.size(); ++i)
    if (toks[i] >= vocab_.base_size)
      throw Error("unknown symbol " + std::to_string(toks[i]) + " at position " + std::to_string(i));
  if (ranks_.empty()) return toks;

  for (;;) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    TokenPair best_pair{};
    TokenId best_id = 0;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      const auto it = ranks_.find({toks[i], toks[i + 1]});
      if (it != ranks_.end() && it->second.rank < best) {
        best = it->second.rank;
        best_pair = it->first;
        best_id = it->second.new_id;
      }
    }
    if (best == std::numeric_limits<std::size_t>::max()) break;
    std::size_t w = 0;
    for (std::size_t i = 0; i < toks.size();) {
      if (i + 1 < toks.size() && toks[i] == best_pair.left && toks[i + 1] == best_pair.right) {
        toks[w++] = best_id;
        i += 2;
      } else {
        toks[w++] = toks[i++];
      }
    }
    toks.resize(w);
  }
  return toks;
}

std::vector<SymbolId> Tokenizer::decode(std::span<const TokenId> ids) const {
  std::vector<SymbolId> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= expansions_.size())
      throw Error("invalid token id " + std::to_string(ids[i]) + " at position " + std::to_string(i));
    const auto& e = expansions_[ids[i]];
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

}  // namespace qatok
