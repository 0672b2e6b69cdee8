#pragma once

#include "qatok/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace qatok {

/// Base-alphabet elements with one quality in [0,1] per element.
struct AtomicSequence {
  std::vector<SymbolId> elements;
  std::vector<double> qualities;
  std::string source_id;

  std::size_t size() const noexcept { return elements.size(); }
  friend bool operator==(const AtomicSequence&, const AtomicSequence&) = default;
};

/// Throws std::invalid_argument when an AtomicSequence invariant is broken.
void validate(const AtomicSequence& seq, std::size_t alphabet_size);

namespace genomics {
inline constexpr std::size_t kAlphabetSize = 5;
inline constexpr char kSymbols[kAlphabetSize + 1] = "ACGTN";
/// Returns kAlphabetSize for characters outside {A,C,G,T,N}.
std::size_t symbol_index(char base) noexcept;
}  // namespace genomics

/// Reads 4-line FASTQ records with Phred+33 qualities.
std::vector<AtomicSequence> read_fastq(std::istream& in);

/// Token and adjacent-pair counts over a segmented corpus.
struct PairStats {
  std::vector<std::int64_t> token_freq;
  std::unordered_map<TokenPair, std::int64_t, TokenPairHash> pair_freq;
  std::int64_t total_tokens = 0;

  std::int64_t freq(TokenId t) const noexcept {
    return t < token_freq.size() ? token_freq[t] : 0;
  }
  std::int64_t freq(TokenPair p) const noexcept {
    auto it = pair_freq.find(p);
    return it == pair_freq.end() ? 0 : it->second;
  }

  friend bool operator==(const PairStats&, const PairStats&) = default;
};

using Segmentation = std::vector<std::vector<TokenId>>;

/// Exact counts from scratch. Sharded over worker_threads(); the result does
/// not depend on the shard count. Throws if a token id is >= token_count.
PairStats count_pairs(const Segmentation& segmentation, std::size_t token_count,
                      unsigned threads = 0);

/// Base segmentation: one token per atomic element.
Segmentation base_segmentation(std::span<const AtomicSequence> corpus);

struct MergeOutcome {
  bool applied = false;
  std::int64_t occurrences = 0;
  /// Quality accumulator and atomic length pooled over all new occurrences.
  double pooled_accumulator = 0.0;
  std::int64_t pooled_length = 0;
  /// Mean over the new occurrences of their aggregated quality.
  double mean_occurrence_quality = 0.0;
};

/// A corpus under progressive merging: segmentation, pair statistics and
/// per-occurrence quality accumulators, all updated incrementally.
///
/// Each occurrence carries an additive accumulator over its atomic span:
/// sum of log(q + eps_q) under geometric aggregation, sum of q under
/// arithmetic. Occurrence quality is exp(acc/len) or acc/len respectively.
/// Token quality q_t is the mean of occurrence qualities over the token's
/// live occurrences; when a token loses all occurrences it keeps its last
/// value.
class SegmentedCorpus {
 public:
  SegmentedCorpus(std::span<const AtomicSequence> corpus, std::size_t alphabet_size,
                  Domain domain, double eps_q = 1e-8);

  const PairStats& stats() const noexcept { return stats_; }
  const Segmentation& segmentation() const noexcept { return segmentation_; }
  std::size_t token_count() const noexcept { return lengths_.size(); }
  std::size_t alphabet_size() const noexcept { return alphabet_size_; }
  Domain domain() const noexcept { return domain_; }
  double eps_q() const noexcept { return eps_q_; }

  std::uint32_t token_length(TokenId t) const { return lengths_.at(t); }
  const std::vector<std::uint32_t>& token_lengths() const noexcept { return lengths_; }
  double token_quality(TokenId t) const;
  const std::vector<double>& occurrence_accumulators(std::size_t seq) const {
    return accumulators_.at(seq);
  }
  double occurrence_quality(double accumulator, std::uint32_t length) const;

  /// Pooled quality over all current occurrences of `pair` as if merged,
  /// without modifying anything. Returns occurrence count 0 when absent.
  MergeOutcome preview_merge(TokenPair pair) const;

  /// Replaces every adjacent (a,b) left-to-right, non-overlapping, by
  /// `new_id`, which must equal token_count(). A pair with zero count is a
  /// no-op reported through `applied == false`.
  MergeOutcome apply_merge(TokenPair pair, TokenId new_id);

  /// Registers `new_id` for a merge that has no occurrences here (replaying
  /// a vocabulary learned elsewhere). The token keeps `quality` as its q_t.
  void reserve_token(TokenPair pair, TokenId new_id, double quality);

 private:
  void bump_pair(TokenPair p, std::int64_t delta, std::uint32_t seq);
  double accumulate_one(double q) const;

  std::size_t alphabet_size_;
  Domain domain_;
  double eps_q_;
  Segmentation segmentation_;
  std::vector<std::vector<double>> accumulators_;
  std::vector<std::uint32_t> lengths_;
  std::vector<double> quality_sum_;
  std::vector<double> last_quality_;
  PairStats stats_;
  std::unordered_map<TokenPair, std::vector<std::uint32_t>, TokenPairHash> where_;
};

}  // namespace qatok
