#pragma once

#include "qatok/corpus.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qatok {

/// Per-component EMA statistics for reward normalization.
struct RewardStats {
  double mean = 0.0;
  double var = 1.0;
  double beta = 0.01;
  double eps = 1e-8;
  std::int64_t count = 0;

  double sigma() const { return std::sqrt(var); }
};

/// Normalizes `raw` against the pre-update statistics, then folds it in:
///   mu_t  = (1-b) mu_{t-1} + b raw
///   var_t = (1-b) var_{t-1} + b (raw - mu_{t-1})(raw - mu_t)
double ema_update(RewardStats& stats, double raw);

struct InformationReward {
  double value = 0.0;
  /// f_ab was zero and `value` is the log(eps_p) floor.
  bool sentinel = false;
};

/// log( (f_ab/T) / ((f_a/T)(f_b/T) + eps_p) )
InformationReward raw_information_reward(double f_ab, double f_a, double f_b, double total,
                                         double eps_p = 1e-8);

/// Geometric or length-weighted quality of the token the merge would create.
double raw_quality_reward(const SegmentedCorpus& corpus, TokenPair pair);

/// (1 + max(0, (sigma_curr - sigma_hist)/(sigma_hist + eps)))^beta_vol
double vol_scale(double sigma_curr, double sigma_hist, double beta_vol, double eps = 1e-8);

/// genomics: -|t|; finance: -|t| log(|V|+1) * vol_scale
double raw_complexity_penalty(Domain domain, std::uint32_t merged_length, std::size_t vocab_size,
                              double beta_vol = 0.5, double sigma_curr = 1.0, double sigma_hist = 1.0);

/// Half-open span of atomic positions within one sequence.
struct Interval {
  std::size_t seq = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

double jaccard(const Interval& a, const Interval& b);

/// Atomic spans the merged token would occupy (left-to-right, non-overlapping).
std::vector<Interval> merge_occurrence_spans(const SegmentedCorpus& corpus, TokenPair pair);

/// Mean over merged occurrences of the best Jaccard overlap with any feature
/// in the same sequence. nullopt when no annotations are supplied.
std::optional<double> genomic_domain_reward(const SegmentedCorpus& corpus, TokenPair pair,
                                            std::span<const Interval> features);

/// Plug-in mutual information (nats) between a binary variable and a label
/// in {0,1,2}, both per observation.
double plugin_mutual_information(std::span<const std::uint8_t> x, std::span<const int> y);

/// MI between "atomic position covered by the merged token" and the return
/// tercile of that position. nullopt when no labels are supplied.
std::optional<double> finance_token_mi(const SegmentedCorpus& corpus, TokenPair pair,
                                       const std::vector<std::vector<int>>& labels);

/// Divides MI by the 95th percentile (linear interpolation) of a ring of the
/// most recent raw values, current value included.
class MiNormalizer {
 public:
  explicit MiNormalizer(std::size_t capacity = 1000, double eps = 1e-8) : capacity_(capacity), eps_(eps) {}
  double peek(double mi) const;
  double commit(double mi);

 private:
  std::size_t capacity_;
  double eps_;
  std::deque<double> ring_;
};

/// Linear-interpolated percentile, p in [0,1].
double percentile(std::vector<double> values, double p);

/// Named reward weights lambda_j = softmax(logits).
struct RewardWeights {
  std::vector<std::string> names;
  std::vector<double> logits;

  static RewardWeights from_weights(std::vector<std::string> names, const std::vector<double>& lambdas);
  std::vector<double> weights() const;
  double weight(const std::string& name) const;

  /// Weighted sum over present components; weights renormalize over them.
  /// Throws std::invalid_argument for a component without a weight.
  double total(const std::map<std::string, double>& components) const;
};

inline const std::string kRewardQuality = "quality";
inline const std::string kRewardInformation = "information";
inline const std::string kRewardComplexity = "complexity";
inline const std::string kRewardDomain = "domain";

/// Converged reward weights used when Stage 2 is skipped.
RewardWeights default_reward_weights(Domain domain);

struct RewardConfig {
  Domain domain = Domain::genomics;
  double eps_p = 1e-8;
  double beta_vol = 0.5;
  double sigma_curr = 1.0;
  double sigma_hist = 1.0;
  double beta_norm = 0.01;
  std::vector<Interval> features;               // genomics annotations
  std::vector<std::vector<int>> return_labels;  // finance, per sequence position
  RewardWeights weights = default_reward_weights(Domain::genomics);
};

struct RewardTraceRow {
  std::int64_t step = 0;
  std::string component;
  double raw = 0.0;
  double normalized = 0.0;
};

/// Raw components for every candidate plus EMA-normalized totals for the
/// merges actually taken.
class RewardEngine {
 public:
  explicit RewardEngine(RewardConfig cfg);

  /// Raw component values; domain is absent without annotations.
  std::map<std::string, double> raw(const SegmentedCorpus& corpus, TokenPair pair) const;

  /// Normalizes the chosen merge's components, updates the running stats and
  /// returns the weighted total.
  double step(const SegmentedCorpus& corpus, TokenPair pair);

  const std::map<std::string, RewardStats>& stats() const noexcept { return stats_; }
  const std::vector<RewardTraceRow>& trace() const noexcept { return trace_; }
  const RewardConfig& config() const noexcept { return cfg_; }

 private:
  RewardConfig cfg_;
  std::map<std::string, RewardStats> stats_;
  MiNormalizer mi_;
  std::vector<RewardTraceRow> trace_;
  std::int64_t steps_ = 0;
};

}  // namespace qatok
