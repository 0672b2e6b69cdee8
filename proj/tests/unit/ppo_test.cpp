#include "qatok/common.hpp"
#include "qatok/mlp.hpp"
#include "qatok/ppo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

namespace qatok {
namespace {

double weighted_output(const Mlp& net, const std::vector<double>& x, const std::vector<double>& c) {
  const auto y = net.forward(x);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += c[i] * y[i];
  return s;
}

TEST(Mlp, BackwardMatchesCentralDifferences) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  Mlp net({6, 16, 8, 3}, 5);
  for (auto& p : net.params()) p += 0.05 * n(rng);  // move biases off zero
  std::vector<double> x(6), c(3);
  for (auto& v : x) v = n(rng);
  for (auto& v : c) v = n(rng);

  Mlp::Cache cache;
  net.forward(x, &cache);
  std::vector<double> grad(net.param_count(), 0.0);
  net.backward(cache, c, grad);

  const double h = 1e-6;
  for (int k = 0; k < 10; ++k) {
    const std::size_t i = rng() % net.param_count();
    Mlp plus = net, minus = net;
    plus.params()[i] += h;
    minus.params()[i] -= h;
    const double fd = (weighted_output(plus, x, c) - weighted_output(minus, x, c)) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "coordinate " << i;
  }
}

TEST(Mlp, BackwardAccumulates) {
  Mlp net({2, 4, 1}, 3);
  Mlp::Cache cache;
  net.forward(std::vector<double>{0.5, -0.25}, &cache);
  std::vector<double> once(net.param_count(), 0.0), twice(net.param_count(), 0.0);
  net.backward(cache, std::vector<double>{1.0}, once);
  net.backward(cache, std::vector<double>{1.0}, twice);
  net.backward(cache, std::vector<double>{1.0}, twice);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_DOUBLE_EQ(twice[i], 2 * once[i]);
}

TEST(Mlp, CheckpointRoundTripAndCorruption) {
  Mlp net({5, 7, 2}, 11);
  std::stringstream ss;
  save_mlp(ss, net);
  const std::string bytes = ss.str();
  std::istringstream in(bytes);
  EXPECT_EQ(load_mlp(in), net);

  std::string flipped = bytes;
  flipped[20] ^= 0x01;
  std::istringstream bad(flipped);
  EXPECT_THROW(load_mlp(bad), ParseError);
  std::istringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_mlp(cut), ParseError);
  std::istringstream junk("not a network");
  EXPECT_THROW(load_mlp(junk), ParseError);
}

TEST(MaskedSoftmax, MaskedEntriesGetZero) {
  const std::vector<double> logits{1.0, 50.0, 0.0, -2.0};
  const std::vector<std::uint8_t> mask{1, 0, 1, 1};
  const auto p = masked_softmax(logits, mask);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
  const double z = std::exp(1.0) + 1.0 + std::exp(-2.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-15);
  EXPECT_NEAR(p[0] + p[2] + p[3], 1.0, 1e-15);
}

TEST(Adam, ZeroLearningRateLeavesParams) {
  std::vector<double> params{1.0, -2.0, 3.0};
  const auto before = params;
  Adam opt(3, 0.0);
  opt.step(params, std::vector<double>{0.5, 0.5, -1.0});
  EXPECT_EQ(params, before);
}

TEST(Gae, MatchesDirectDiscountedSum) {
  const std::vector<double> r{1.0, 0.0, -0.5, 2.0};
  const std::vector<double> v{0.3, 0.1, 0.4, -0.2};
  const double last = 0.7, gamma = 0.9, lambda = 0.8;
  std::vector<double> adv, ret;
  compute_gae(r, v, last, gamma, lambda, adv, ret);
  std::vector<double> delta(r.size());
  for (std::size_t t = 0; t < r.size(); ++t)
    delta[t] = r[t] + gamma * (t + 1 < r.size() ? v[t + 1] : last) - v[t];
  for (std::size_t t = 0; t < r.size(); ++t) {
    double a = 0.0;
    for (std::size_t l = 0; t + l < r.size(); ++l) a += std::pow(gamma * lambda, l) * delta[t + l];
    EXPECT_NEAR(adv[t], a, 1e-14);
    EXPECT_NEAR(ret[t], a + v[t], 1e-14);
  }
}

TEST(Gae, LambdaOneGivesMonteCarloReturn) {
  const std::vector<double> r{1.0, 2.0, 3.0};
  const std::vector<double> v{0.5, 0.5, 0.5};
  std::vector<double> adv, ret;
  compute_gae(r, v, 0.0, 1.0, 1.0, adv, ret);
  EXPECT_NEAR(ret[0], 6.0, 1e-15);
  EXPECT_NEAR(ret[1], 5.0, 1e-15);
  EXPECT_NEAR(ret[2], 3.0, 1e-15);
}

TEST(Exploration, AnnealsExponentially) {
  PpoConfig cfg;
  EXPECT_DOUBLE_EQ(exploration_rate(cfg, 0, 101), 0.5);
  EXPECT_NEAR(exploration_rate(cfg, 100, 101), 0.05, 1e-15);
  EXPECT_NEAR(exploration_rate(cfg, 50, 101), std::sqrt(0.5 * 0.05), 1e-15);
  for (std::size_t e = 1; e < 101; ++e) EXPECT_LT(exploration_rate(cfg, e, 101), exploration_rate(cfg, e - 1, 101));
}

TEST(PpoConfig, Validation) {
  PpoConfig cfg;
  cfg.clip = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  PpoConfig lr;
  lr.policy_lr = -1.0;
  EXPECT_THROW(lr.validate(), ConfigError);
}

EnvFactory bandit(std::uint64_t seed) {
  return [seed] { return std::unique_ptr<Environment>(new BanditEnv(4, 4, 10, seed)); };
}

TEST(TrainPpo, ZeroLearningRateLeavesWeights) {
  PpoConfig cfg;
  cfg.hidden = {16};
  cfg.policy_lr = 0.0;
  cfg.value_lr = 0.0;
  const auto untrained = train_ppo(bandit(1), cfg, 0);
  const auto trained = train_ppo(bandit(1), cfg, 20);
  EXPECT_EQ(trained.policy, untrained.policy);
  EXPECT_EQ(trained.value, untrained.value);
  EXPECT_EQ(trained.log.size(), 20u);
}

TEST(TrainPpo, LearnsBanditArm) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    PpoConfig cfg;
    cfg.seed = s;
    cfg.hidden = {32, 32};
    cfg.policy_lr = 3e-3;
    cfg.value_lr = 3e-3;
    const auto r = train_ppo(bandit(3 + s), cfg, 100);
    BanditEnv env(4, 4, 10, 3 + s);
    const std::vector<std::uint8_t> mask(4, 1);
    double p = 0.0;
    auto state = env.reset();
    for (int i = 0; i < 10; ++i) {
      p += masked_softmax(r.policy.forward(state), mask)[env.good_action()];
      state = env.step(0).state;
    }
    EXPECT_GT(p / 10, 0.9) << "seed " << s;
  }
}

TEST(TrainPpo, DeterministicForSeed) {
  PpoConfig cfg;
  cfg.hidden = {8};
  cfg.seed = 5;
  const auto a = train_ppo(bandit(2), cfg, 10);
  const auto b = train_ppo(bandit(2), cfg, 10);
  EXPECT_EQ(a.policy, b.policy);
  std::ostringstream la, lb;
  write_training_log(la, a.log);
  write_training_log(lb, b.log);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_EQ(la.str().rfind("episode,mean_reward,entropy,value_loss\n", 0), 0u);
}

}  // namespace
}  // namespace qatok
