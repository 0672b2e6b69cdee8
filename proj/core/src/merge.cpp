#include "qatok/merge.hpp"

#include "qatok/quality.hpp"

#include <algorithm>
#include <cmath>

namespace qatok {

void MergeScoreParams::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(eps_f > 0.0) || !(eps_q > 0.0)) throw ConfigError("merge epsilons must be > 0");
}

double merge_score(double f_ab, double f_a, double f_b, double q_a, double q_b,
                   const MergeScoreParams& p, double psi) {
  if (f_ab <= 0.0) return 0.0;
  const double assoc = f_ab / (f_a * f_b + p.eps_f);
  const double qbar = 0.5 * (q_a + q_b);
  return assoc * std::pow(qbar + p.eps_q, p.alpha) * psi;
}

double merge_score_dalpha(double f_ab, double f_a, double f_b, double q_a, double q_b,
                          const MergeScoreParams& p, double psi) {
  const double qbar = 0.5 * (q_a + q_b);
  return merge_score(f_ab, f_a, f_b, q_a, q_b, p, psi) * std::log(qbar + p.eps_q);
}

std::vector<Candidate> score_candidates(const SegmentedCorpus& corpus, const MergeScoreParams& p) {
  const auto& st = corpus.stats();
  std::vector<Candidate> out;
  out.reserve(st.pair_freq.size());
  for (const auto& [pair, f_ab] : st.pair_freq) {
    const double w = merge_score(static_cast<double>(f_ab), static_cast<double>(st.freq(pair.left)),
                                 static_cast<double>(st.freq(pair.right)), corpus.token_quality(pair.left),
                                 corpus.token_quality(pair.right), p, p.psi_of(pair));
    out.push_back({pair, w, f_ab});
  }
  return out;
}

std::vector<Candidate> rank_candidates(std::vector<Candidate> c, std::size_t k) {
  std::sort(c.begin(), c.end(), [](const Candidate& x, const Candidate& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.pair < y.pair;
  });
  for (std::size_t g = 0; g < c.size() && g < k;) {
    const double floor = c[g].score * (1.0 - kScoreTieTolerance);
    std::size_t end = g + 1;
    while (end < c.size() && c[end].score >= floor) ++end;
    std::sort(c.begin() + static_cast<std::ptrdiff_t>(g), c.begin() + static_cast<std::ptrdiff_t>(end),
              [](const Candidate& x, const Candidate& y) { return x.pair < y.pair; });
    g = end;
  }
  if (c.size() > k) c.resize(k);
  return c;
}

std::vector<Candidate> build_priority_queue(const SegmentedCorpus& corpus, const MergeScoreParams& p,
                                            std::size_t k_pq) {
  if (k_pq == 0) throw std::invalid_argument("K_PQ must be >= 1");
  return rank_candidates(score_candidates(corpus, p), k_pq);
}

double length_weighted_quality(std::uint32_t len_a, double q_a, std::uint32_t len_b, double q_b) {
  return clamp_unit((len_a * q_a + len_b * q_b) / static_cast<double>(len_a + len_b));
}

MergedQuality token_quality_on_merge(const SegmentedCorpus& corpus, TokenPair pair) {
  const auto la = corpus.token_length(pair.left);
  const auto lb = corpus.token_length(pair.right);
  const double qa = corpus.token_quality(pair.left);
  const double qb = corpus.token_quality(pair.right);
  if (corpus.domain() == Domain::finance) return {length_weighted_quality(la, qa, lb, qb), false};

  const auto pooled = corpus.preview_merge(pair);
  if (pooled.occurrences == 0) {
    // Geometric pooling of the constituents, weighted by their lengths.
    const double eps = corpus.eps_q();
    const double acc = la * std::log(qa + eps) + lb * std::log(qb + eps);
    return {clamp_unit(std::exp(acc / static_cast<double>(la + lb))), true};
  }
  return {clamp_unit(std::exp(pooled.pooled_accumulator / static_cast<double>(pooled.pooled_length))), false};
}

GreedyResult greedy_build(SegmentedCorpus& corpus, const MergeScoreParams& p, std::size_t k) {
  p.validate();
  GreedyResult r;
  r.requested = k;
  r.vocab.base_size = corpus.alphabet_size();
  r.vocab.domain = corpus.domain();
  r.vocab.alpha = p.alpha;
  r.vocab.eps_f = p.eps_f;
  r.vocab.eps_q = p.eps_q;
  while (r.executed < k) {
    const auto top = build_priority_queue(corpus, p, 1);
    if (top.empty()) {
      r.stopped_early = true;
      break;
    }
    const TokenPair pair = top.front().pair;
    const auto new_id = static_cast<TokenId>(corpus.token_count());
    corpus.apply_merge(pair, new_id);
    r.vocab.merges.push_back({pair.left, pair.right, new_id, corpus.token_quality(new_id)});
    ++r.executed;
  }
  return r;
}

GreedyResult greedy_build(std::span<const AtomicSequence> corpus, std::size_t alphabet_size, Domain domain,
                          const MergeScoreParams& p, std::size_t k) {
  SegmentedCorpus seg(corpus, alphabet_size, domain, p.eps_q);
  return greedy_build(seg, p, k);
}

}  // namespace qatok
