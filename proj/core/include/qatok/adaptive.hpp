#pragma once

#include "qatok/corpus.hpp"
#include "qatok/quality.hpp"
#include "qatok/rewards.hpp"
#include "qatok/tape.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qatok {

/// Learnable process parameters theta_adapt.
struct AdaptiveParams {
  double alpha = 0.0;
  double beta_pos = 0.014;
  double beta_vol = 0.5;
  /// Finance quality weights w_k = softmax(quality_logits).
  std::array<double, 4> quality_logits{};
  /// Reward weights lambda_j = softmax(reward_logits), named as in rewards.
  std::vector<std::string> reward_names;
  std::vector<double> reward_logits;
  double lambda_reg = 1e-4;

  /// Converged values used when Stage 2 is skipped.
  static AdaptiveParams defaults(Domain domain);

  std::array<double, 4> quality_weights() const;
  RewardWeights reward_weights() const;
  /// Clamps alpha, beta_pos, beta_vol at 0.
  void project();
  void validate() const;

  friend bool operator==(const AdaptiveParams&, const AdaptiveParams&) = default;
};

/// `name value` lines followed by `checksum <crc32 hex>`.
std::string serialize_params(const AdaptiveParams& p);
AdaptiveParams parse_params(const std::string& text);

struct AnnealSchedule {
  double tau_init = 1.0;
  double beta_anneal = 3.0;
  std::size_t total_steps = 100;
  double tau_final = 0.1;

  /// max(tau_final, tau_init * exp(-beta_anneal * t / total_steps))
  double tau(std::size_t t) const;
};

/// Gumbel(0,1) draws -log(-log u); the zero source always yields 0.
class GumbelNoise {
 public:
  explicit GumbelNoise(std::uint64_t seed) : rng_(seed) {}
  static GumbelNoise zero() {
    GumbelNoise g(0);
    g.zero_ = true;
    return g;
  }
  double operator()();

 private:
  std::mt19937_64 rng_;
  bool zero_ = false;
};

/// l = w_ab + sum_j lambda_j R_j (raw rewards).
double composite_logit(double w_ab, std::span<const double> rewards, std::span<const double> lambdas);

/// softmax((l + g) / tau) with max subtraction.
std::vector<double> gumbel_softmax(std::span<const double> logits, std::span<const double> noise, double tau);
std::vector<double> gumbel_softmax_sample(std::span<const double> logits, double tau, GumbelNoise& noise);

/// J_ij = (1/tau) y_i (delta_ij - y_j), row-major k x k.
std::vector<std::vector<double>> gumbel_jacobian(std::span<const double> y, double tau);

/// Window of atomic elements with a binary downstream label. Finance samples
/// carry per-element components so their quality can depend on theta.
struct AdaptiveSample {
  AtomicSequence seq;
  std::vector<FinanceComponents> components;
  int label = 0;
};

struct SoftConfig {
  Domain domain = Domain::genomics;
  std::size_t k_candidates = 5;
  std::size_t steps = 3;
  double eps_f = 1e-8;
  double eps_q = 1e-8;
  double eps_p = 1e-8;
  double eps_len = 1e-6;
  /// Standardize each reward across the step's candidates before weighting.
  bool batch_norm_rewards = false;
};

/// theta_adapt recorded as tape variables.
struct ParamVars {
  Var alpha, beta_pos, beta_vol;
  std::array<Var, 4> quality_logits;
  std::vector<Var> reward_logits;
  std::vector<std::string> reward_names;

  static ParamVars record(Tape& tape, const AdaptiveParams& p);
};

/// Per-step candidate features (quality, length, PMI) mixed by the
/// Gumbel-Softmax weights and averaged over steps.
struct SoftSummary {
  Var quality, length, pmi;
  std::size_t steps_taken = 0;
  std::vector<TokenPair> hard_path;
  /// Composite logits of the candidates at the first step (diagnostics).
  std::vector<double> first_logits;
};

/// Simulates `cfg.steps` merges on one window: each step scores the live
/// pairs, keeps the top k by composite logit, relaxes the choice with
/// Gumbel-Softmax and follows the hard argmax(l + g) along the discrete path.
SoftSummary soft_tokenize(Tape& tape, const ParamVars& theta, const AdaptiveSample& sample,
                          std::size_t alphabet_size, double tau, const SoftConfig& cfg, GumbelNoise& noise);

using TaskLoss = std::function<Var(const SoftSummary&, int label)>;

/// BCE on p = sigmoid(kappa (summary quality - threshold)).
TaskLoss quality_threshold_loss(double kappa = 10.0, double threshold = 0.5);

struct TrainAdaptiveConfig {
  std::size_t iterations = 100;
  double eta0 = 0.5;
  AnnealSchedule schedule;
  SoftConfig soft;
  std::uint64_t seed = 0;
  bool freeze_alpha = false;
};

struct LossTraceRow {
  std::size_t iter = 0;
  double tau = 0.0;
  double task_loss = 0.0;
  double total_loss = 0.0;
  double alpha = 0.0;
};

struct TrainAdaptiveResult {
  AdaptiveParams params;
  std::vector<LossTraceRow> trace;
};

/// Raised when the loss or a parameter turns non-finite; carries the last
/// finite parameters.
class AdaptiveDivergenceError : public DivergenceError {
 public:
  AdaptiveDivergenceError(const std::string& what, AdaptiveParams last)
      : DivergenceError(what), last_finite(std::move(last)) {}
  AdaptiveParams last_finite;
};

/// Flat parameter order used for gradients: alpha, beta_pos, beta_vol,
/// quality logits (4), reward logits.
std::vector<double> flatten(const AdaptiveParams& p);
void unflatten(std::span<const double> theta, AdaptiveParams& p);

struct LossAndGrad {
  double task_loss = 0.0;
  std::vector<double> grad;  // d task_loss / d theta, flat order
};

/// Mean task loss over the batch and its gradient, with per-sample noise
/// drawn from `noise_seed` (or zero noise when `zero_noise`).
LossAndGrad task_loss_and_grad(const TaskLoss& task, std::span<const AdaptiveSample> data, std::size_t alphabet_size,
                               const AdaptiveParams& p, double tau, const SoftConfig& cfg,
                               std::uint64_t noise_seed, bool zero_noise);

/// Plain GD on task + lambda_reg ||theta||^2 with eta_t = eta0 / sqrt(t),
/// projection after each step and annealed temperature.
TrainAdaptiveResult train_adaptive(const TaskLoss& task, std::span<const AdaptiveSample> data,
                                   std::size_t alphabet_size, AdaptiveParams p0, const TrainAdaptiveConfig& cfg);

/// Deterministic evaluation: zero noise at the given temperature.
double evaluate_task_loss(const TaskLoss& task, std::span<const AdaptiveSample> data, std::size_t alphabet_size,
                          const AdaptiveParams& p, double tau, const SoftConfig& cfg);

/// Synthetic quality-correlated windows: a frequent high-quality motif with
/// rare low-quality noise pairs (label 1) or uniformly low quality (label 0).
/// Labels are 1 iff the window's mean quality exceeds 0.5.
struct QualityTaskSpec {
  std::size_t windows = 40;
  std::size_t motif_repeats = 5;
  std::size_t noise_pairs = 2;
  std::size_t noise_symbols = 8;
};
inline constexpr std::size_t kMotifSymbols = 4;
std::vector<AdaptiveSample> make_quality_task(const QualityTaskSpec& spec, std::uint64_t seed);
std::size_t quality_task_alphabet(const QualityTaskSpec& spec);

/// CSV `iter,tau,task_loss,total_loss,alpha`.
void write_loss_trace(std::ostream& out, const std::vector<LossTraceRow>& trace);

}  // namespace qatok
