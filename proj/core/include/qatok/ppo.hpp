#pragma once

#include "qatok/mlp.hpp"
#include "qatok/rl_env.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <vector>

namespace qatok {

struct PpoConfig {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double gamma = 0.99;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  std::size_t epochs = 4;
  std::size_t episodes_per_update = 1;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  double eps_start = 0.5;
  double eps_end = 0.05;
  std::vector<std::size_t> hidden{256, 128};
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpisodeLog {
  std::size_t episode = 0;
  double mean_reward = 0.0;
  double entropy = 0.0;
  double value_loss = 0.0;
};

struct PpoResult {
  Mlp policy;
  Mlp value;
  std::vector<EpisodeLog> log;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

/// Exploration rate for `episode` of `total`: exponential from eps_start to eps_end.
double exploration_rate(const PpoConfig& cfg, std::size_t episode, std::size_t total);

/// Generalized advantage estimates and discounted returns for one episode.
void compute_gae(const std::vector<double>& rewards, const std::vector<double>& values, double last_value,
                 double gamma, double lambda, std::vector<double>& advantages, std::vector<double>& returns);

/// Clipped-surrogate PPO with GAE, entropy bonus and value MSE. The behaviour
/// policy is epsilon-greedy over the mask; importance ratios use the policy's
/// own probabilities. Throws DivergenceError on a non-finite loss.
PpoResult train_ppo(const EnvFactory& factory, const PpoConfig& cfg, std::size_t episodes);

/// Mean per-episode return of a policy network (sampled actions) or, with
/// `policy == nullptr`, of the uniform random policy over the mask.
double evaluate_policy(Environment& env, const Mlp* policy, std::size_t episodes, std::uint64_t seed);

/// Picks an action from masked softmax(policy(state)).
std::size_t sample_action(const Mlp& policy, const std::vector<double>& state,
                          const std::vector<std::uint8_t>& mask, std::mt19937_64& rng);

/// CSV `episode,mean_reward,entropy,value_loss`.
void write_training_log(std::ostream& out, const std::vector<EpisodeLog>& log);

}  // namespace qatok
