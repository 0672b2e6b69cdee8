#pragma once

#include "qatok/corpus.hpp"
#include "qatok/vocabulary.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace qatok {

struct MergeScoreParams {
  double alpha = 0.0;
  double eps_f = 1e-8;
  double eps_q = 1e-8;
  /// Domain constraint in [0,1]; empty means constant 1.
  std::function<double(TokenPair)> psi;

  void validate() const;
  double psi_of(TokenPair p) const { return psi ? psi(p) : 1.0; }
};

/// w = f_ab / (f_a f_b + eps_f) * ((q_a + q_b)/2 + eps_q)^alpha * psi
double merge_score(double f_ab, double f_a, double f_b, double q_a, double q_b,
                   const MergeScoreParams& p, double psi = 1.0);

/// dw/dalpha = w * ln((q_a + q_b)/2 + eps_q)
double merge_score_dalpha(double f_ab, double f_a, double f_b, double q_a, double q_b,
                          const MergeScoreParams& p, double psi = 1.0);

/// Relative band inside which two scores count as tied, so that sub-ulp
/// noise in aggregated qualities never reorders candidates.
inline constexpr double kScoreTieTolerance = 1e-12;

struct Candidate {
  TokenPair pair;
  double score = 0.0;
  std::int64_t f_ab = 0;
};

/// Scores every live adjacent pair of the corpus.
std::vector<Candidate> score_candidates(const SegmentedCorpus& corpus, const MergeScoreParams& p);

/// Orders candidates by descending score; candidates within the tie band of
/// the leading score of their group are ordered by (a, b) ascending. Keeps
/// the first k.
std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates, std::size_t k);

std::vector<Candidate> build_priority_queue(const SegmentedCorpus& corpus, const MergeScoreParams& p,
                                            std::size_t k_pq = 50);

struct MergedQuality {
  double quality = 0.0;
  /// No occurrences existed, so the constituent-level aggregate was used.
  bool fallback = false;
};

/// Length-weighted constituent aggregate (finance rule, also the fallback).
double length_weighted_quality(std::uint32_t len_a, double q_a, std::uint32_t len_b, double q_b);

/// Quality of the token that merging `pair` would create: geometric mean over
/// every atomic quality the merged occurrences span (genomics) or the
/// length-weighted constituent average (finance).
MergedQuality token_quality_on_merge(const SegmentedCorpus& corpus, TokenPair pair);

struct GreedyResult {
  Vocabulary vocab;
  std::size_t requested = 0;
  std::size_t executed = 0;
  bool stopped_early = false;
};

/// Alg. 3: repeatedly merge the top-ranked pair until k merges or no pairs.
/// `corpus` qualities must already be position/market adjusted.
GreedyResult greedy_build(std::span<const AtomicSequence> corpus, std::size_t alphabet_size,
                          Domain domain, const MergeScoreParams& p, std::size_t k);

/// Same loop over an existing segmented corpus (mutated in place).
GreedyResult greedy_build(SegmentedCorpus& corpus, const MergeScoreParams& p, std::size_t k);

}  // namespace qatok
