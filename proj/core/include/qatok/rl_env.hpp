#pragma once

#include "qatok/corpus.hpp"
#include "qatok/merge.hpp"
#include "qatok/rewards.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace qatok {

inline constexpr std::size_t kHistogramBins = 10;

/// 5 vocabulary features + 6 per candidate + two 10-bin histograms + progress.
constexpr std::size_t state_dimension(std::size_t k_pq) { return 5 + 6 * k_pq + 2 * kHistogramBins + 1; }

struct LogFreqRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Fixed-length MDP state for the current corpus and candidate queue.
std::vector<double> encode_state(const SegmentedCorpus& corpus, std::span<const Candidate> queue,
                                 std::size_t k_pq, std::size_t t, std::size_t horizon, LogFreqRange range);

/// Range of log f(t) over live tokens, used to pin the histogram at episode start.
LogFreqRange log_freq_range(const SegmentedCorpus& corpus);

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
};

/// Episodic environment with a fixed number of action slots and a validity mask.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::vector<double> reset() = 0;
  virtual StepResult step(std::size_t action) = 0;
  virtual std::vector<std::uint8_t> mask() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

struct EnvConfig {
  std::size_t k_pq = 50;
  std::size_t horizon = 20;
  MergeScoreParams score;
  RewardConfig reward;
};

/// Each action merges one queue candidate; rewards come from a RewardEngine
/// whose EMA statistics persist across episodes of the same environment.
/// Copying the environment snapshots it completely.
class TokenizationEnv final : public Environment {
 public:
  TokenizationEnv(std::vector<AtomicSequence> corpus, std::size_t alphabet_size, Domain domain, EnvConfig cfg);

  std::size_t state_dim() const override { return state_dimension(cfg_.k_pq); }
  std::size_t action_count() const override { return cfg_.k_pq; }
  std::vector<double> reset() override;
  StepResult step(std::size_t action) override;
  std::vector<std::uint8_t> mask() const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<TokenizationEnv>(*this); }

  std::vector<double> state() const;
  const SegmentedCorpus& corpus() const noexcept { return seg_; }
  const std::vector<Candidate>& queue() const noexcept { return queue_; }
  const std::vector<TokenPair>& merges() const noexcept { return merges_; }
  std::size_t t() const noexcept { return t_; }
  const RewardEngine& rewards() const noexcept { return engine_; }

 private:
  std::shared_ptr<const std::vector<AtomicSequence>> base_;
  std::size_t alphabet_size_;
  Domain domain_;
  EnvConfig cfg_;
  SegmentedCorpus seg_;
  RewardEngine engine_;
  std::vector<Candidate> queue_;
  std::vector<TokenPair> merges_;
  LogFreqRange range_;
  std::size_t t_ = 0;
};

/// Synthetic bandit-style MDP: `actions` slots, one of which (fixed per
/// seed) always pays 1 while the others pay 0. States are Gaussian noise.
class BanditEnv final : public Environment {
 public:
  BanditEnv(std::size_t actions, std::size_t state_dim, std::size_t horizon, std::uint64_t seed);

  std::size_t state_dim() const override { return state_dim_; }
  std::size_t action_count() const override { return actions_; }
  std::vector<double> reset() override;
  StepResult step(std::size_t action) override;
  std::vector<std::uint8_t> mask() const override { return std::vector<std::uint8_t>(actions_, 1); }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<BanditEnv>(*this); }

  std::size_t good_action() const noexcept { return good_; }

 private:
  std::vector<double> draw_state();

  std::size_t actions_, state_dim_, horizon_;
  std::size_t good_ = 0;
  std::size_t t_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace qatok
