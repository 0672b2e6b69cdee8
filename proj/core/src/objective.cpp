#include "qatok/objective.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qatok {

double token_entropy(std::span<const SymbolId> atoms) {
  if (atoms.size() <= 1) return 0.0;
  std::map<SymbolId, std::size_t> counts;
  for (SymbolId s : atoms) ++counts[s];
  const double n = static_cast<double>(atoms.size());
  double h = 0.0;
  for (const auto& [sym, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

SegmentedCorpus replay(const Vocabulary& vocab, std::span<const AtomicSequence> corpus) {
  vocab.validate();
  for (const auto& s : corpus)
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.elements[i] >= vocab.base_size)
        throw Error("corpus not segmentable: sequence '" + s.source_id + "' position " + std::to_string(i) +
                    " holds symbol " + std::to_string(s.elements[i]) + " outside the base alphabet");
  SegmentedCorpus seg(corpus, vocab.base_size, vocab.domain, vocab.eps_q);
  for (const auto& m : vocab.merges) {
    const TokenPair pair{m.left, m.right};
    if (seg.stats().freq(pair) > 0) {
      seg.apply_merge(pair, m.new_id);
    } else {
      seg.reserve_token(pair, m.new_id, m.quality);
    }
  }
  return seg;
}

ObjectiveTerms objective_terms(const Vocabulary& vocab, const SegmentedCorpus& seg, const ObjectiveWeights& w) {
  ObjectiveTerms t;
  const auto& st = seg.stats();
  const double n = static_cast<double>(st.total_tokens);
  if (n > 0.0) {
    for (TokenId id = 0; id < st.token_freq.size(); ++id) {
      const auto f = st.token_freq[id];
      if (f == 0) continue;
      const double fd = static_cast<double>(f);
      t.log_likelihood += fd * std::log(fd / n);
      t.quality += fd * std::pow(seg.token_quality(id) + w.eps_q, w.alpha);
    }
    t.quality /= n;
  }

  const double v = static_cast<double>(vocab.size());
  t.complexity = v * std::log(v);
  const auto exp = vocab.expansions();
  for (const auto& atoms : exp) t.complexity += static_cast<double>(atoms.size()) * token_entropy(atoms);

  t.value = w.lm * t.log_likelihood - w.comp * t.complexity + w.qual * t.quality;
  return t;
}

double evaluate_objective(const Vocabulary& vocab, std::span<const AtomicSequence> corpus,
                          const ObjectiveWeights& w) {
  const auto seg = replay(vocab, corpus);
  return objective_terms(vocab, seg, w).value;
}

namespace {

struct Search {
  const ObjectiveWeights& w;
  std::size_t k;
  ExhaustiveResult best;
  std::vector<TokenPair> path;
  bool have_best = false;

  void visit(const SegmentedCorpus& seg, const Vocabulary& vocab) {
    if (++best.nodes > kExhaustiveNodeLimit)
      throw Error("exhaustive_optimum: instance too large (more than " + std::to_string(kExhaustiveNodeLimit) +
                  " search nodes)");
    const double value = objective_terms(vocab, seg, w).value;
    if (!have_best || value > best.best_value) {
      have_best = true;
      best.best_value = value;
      best.best_sequence = path;
    }
    if (path.size() == k) return;

    std::vector<TokenPair> pairs;
    pairs.reserve(seg.stats().pair_freq.size());
    for (const auto& [pair, f] : seg.stats().pair_freq) pairs.push_back(pair);
    std::sort(pairs.begin(), pairs.end());
    for (const auto& pair : pairs) {
      SegmentedCorpus child = seg;
      const auto id = static_cast<TokenId>(child.token_count());
      child.apply_merge(pair, id);
      Vocabulary next = vocab;
      next.merges.push_back({pair.left, pair.right, id, child.token_quality(id)});
      path.push_back(pair);
      visit(child, next);
      path.pop_back();
    }
  }
};

}  // namespace

ExhaustiveResult exhaustive_optimum(std::span<const AtomicSequence> corpus, std::size_t alphabet_size,
                                    Domain domain, const ObjectiveWeights& w, std::size_t k) {
  SegmentedCorpus seg(corpus, alphabet_size, domain, w.eps_q);
  // Live pairs at depth i are bounded by both the remaining adjacencies and
  // the pairs the current vocabulary can form.
  double bound = 1.0, level = 1.0;
  const double adjacencies = static_cast<double>(seg.stats().pair_freq.size());
  double positions = 0.0;
  for (const auto& s : corpus) positions += s.size() > 0 ? static_cast<double>(s.size() - 1) : 0.0;
  for (std::size_t i = 0; i < k && level > 0.0; ++i) {
    const double v = static_cast<double>(alphabet_size + i);
    const double width = i == 0 ? adjacencies : std::min(positions - static_cast<double>(i), v * v);
    level *= std::max(width, 0.0);
    bound += level;
    if (bound > static_cast<double>(kExhaustiveNodeLimit))
      throw Error("exhaustive_optimum: instance too large (search bound exceeds " +
                  std::to_string(kExhaustiveNodeLimit) + " nodes)");
  }
  Vocabulary vocab;
  vocab.base_size = alphabet_size;
  vocab.domain = domain;
  vocab.eps_q = w.eps_q;
  Search s{w, k, {}, {}, false};
  s.visit(seg, vocab);
  return s.best;
}

}  // namespace qatok
