#include "qatok/ppo.hpp"

#include "qatok/common.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace qatok {

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo.clip must lie in (0,1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo.gae_lambda must lie in [0,1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must lie in [0,1]");
  if (!(value_coef >= 0.0) || !(entropy_coef >= 0.0)) throw ConfigError("ppo coefficients must be >= 0");
  if (epochs == 0 || episodes_per_update == 0) throw ConfigError("ppo.epochs and episodes_per_update must be >= 1");
  if (!(policy_lr >= 0.0) || !(value_lr >= 0.0)) throw ConfigError("ppo learning rates must be >= 0");
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end > 0.0 && eps_end <= 1.0))
    throw ConfigError("ppo exploration rates must lie in (0,1]");
  for (auto h : hidden)
    if (h == 0) throw ConfigError("ppo hidden sizes must be positive");
}

double exploration_rate(const PpoConfig& cfg, std::size_t episode, std::size_t total) {
  if (total <= 1 || cfg.eps_start <= 0.0) return cfg.eps_start;
  const double frac = static_cast<double>(std::min(episode, total - 1)) / static_cast<double>(total - 1);
  return cfg.eps_start * std::pow(cfg.eps_end / cfg.eps_start, frac);
}

void compute_gae(const std::vector<double>& rewards, const std::vector<double>& values, double last_value,
                 double gamma, double lambda, std::vector<double>& adv, std::vector<double>& ret) {
  const std::size_t n = rewards.size();
  adv.assign(n, 0.0);
  ret.assign(n, 0.0);
  double gae = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_v = i + 1 < n ? values[i + 1] : last_value;
    const double delta = rewards[i] + gamma * next_v - values[i];
    gae = delta + gamma * lambda * gae;
    adv[i] = gae;
    ret[i] = gae + values[i];
  }
}

std::size_t sample_action(const Mlp& policy, const std::vector<double>& state, const std::vector<std::uint8_t>& mask,
                          std::mt19937_64& rng) {
  const auto p = masked_softmax(policy.forward(state), mask);
  std::discrete_distribution<std::size_t> d(p.begin(), p.end());
  return d(rng);
}

namespace {

struct Transition {
  std::vector<double> state;
  std::vector<std::uint8_t> mask;
  std::size_t action = 0;
  double logp_old = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

std::size_t uniform_valid(const std::vector<std::uint8_t>& mask, std::mt19937_64& rng) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) valid.push_back(i);
  return valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)];
}

double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

void require_finite(double v, const std::string& what, std::size_t episode) {
  if (!std::isfinite(v))
    throw DivergenceError("PPO diverged at episode " + std::to_string(episode) + ": " + what + " is " +
                          std::to_string(v));
}

}  // namespace

PpoResult train_ppo(const EnvFactory& factory, const PpoConfig& cfg, std::size_t episodes) {
  cfg.validate();
  auto env = factory();
  if (!env) throw std::invalid_argument("train_ppo: factory returned no environment");
  const std::size_t d = env->state_dim(), a = env->action_count();

  std::vector<std::size_t> psizes{d}, vsizes{d};
  psizes.insert(psizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  vsizes.insert(vsizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  psizes.push_back(a);
  vsizes.push_back(1);

  PpoResult res{Mlp(psizes, derive_seed(cfg.seed, "ppo.policy")), Mlp(vsizes, derive_seed(cfg.seed, "ppo.value")), {}};
  Adam popt(res.policy.param_count(), cfg.policy_lr);
  Adam vopt(res.value.param_count(), cfg.value_lr);
  std::mt19937_64 rng(derive_seed(cfg.seed, "ppo.rollout"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Transition> batch;
  std::vector<double> pgrad(res.policy.param_count()), vgrad(res.value.param_count());

  for (std::size_t ep = 0; ep < episodes; ++ep) {
    const double eps = exploration_rate(cfg, ep, episodes);
    auto state = env->reset();
    std::vector<Transition> traj;
    std::vector<double> rewards, values;
    double entropy_sum = 0.0;
    for (;;) {
      const auto mask = env->mask();
      if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) break;
      const auto p = masked_softmax(res.policy.forward(state), mask);
      entropy_sum += entropy_of(p);
      std::size_t action;
      if (unit(rng) < eps) {
        action = uniform_valid(mask, rng);
      } else {
        std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
        action = dist(rng);
      }
      const double v = res.value.forward(state)[0];
      require_finite(v, "value estimate", ep);
      auto sr = env->step(action);
      traj.push_back({state, mask, action, std::log(std::max(p[action], 1e-300)), 0.0, 0.0});
      rewards.push_back(sr.reward);
      values.push_back(v);
      state = std::move(sr.state);
      if (sr.done) break;
    }

    std::vector<double> adv, ret;
    compute_gae(rewards, values, 0.0, cfg.gamma, cfg.gae_lambda, adv, ret);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      traj[i].advantage = adv[i];
      traj[i].ret = ret[i];
    }
    batch.insert(batch.end(), traj.begin(), traj.end());

    EpisodeLog log;
    log.episode = ep;
    const double steps = static_cast<double>(std::max<std::size_t>(traj.size(), 1));
    for (double r : rewards) log.mean_reward += r;
    log.mean_reward /= steps;
    log.entropy = entropy_sum / steps;

    const bool update = (ep + 1) % cfg.episodes_per_update == 0 || ep + 1 == episodes;
    if (update && !batch.empty()) {
      const double n = static_cast<double>(batch.size());
      double am = 0.0, as = 0.0;
      for (const auto& t : batch) am += t.advantage;
      am /= n;
      for (const auto& t : batch) as += (t.advantage - am) * (t.advantage - am);
      as = std::sqrt(as / n);
      const double scale = (batch.size() > 1 && as > 1e-8) ? as : 1.0;
      const double shift = batch.size() > 1 ? am : 0.0;

      for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(pgrad.begin(), pgrad.end(), 0.0);
        std::fill(vgrad.begin(), vgrad.end(), 0.0);
        double policy_loss = 0.0, value_loss = 0.0;
        for (const auto& t : batch) {
          const double A = (t.advantage - shift) / scale;
          Mlp::Cache pc;
          const auto logits = res.policy.forward(t.state, &pc);
          const auto p = masked_softmax(logits, t.mask);
          const double logp = std::log(std::max(p[t.action], 1e-300));
          const double ratio = std::exp(logp - t.logp_old);
          const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
          const double h = entropy_of(p);
          policy_loss += -std::min(ratio * A, clipped * A) - cfg.entropy_coef * h;

          // Surrogate gradient flows only when the unclipped branch is active.
          const bool active = A >= 0.0 ? ratio <= 1.0 + cfg.clip : ratio >= 1.0 - cfg.clip;
          std::vector<double> dlogits(p.size(), 0.0);
          for (std::size_t j = 0; j < p.size(); ++j) {
            if (!t.mask[j]) continue;
            double g = 0.0;
            if (active) g -= A * ratio * ((j == t.action ? 1.0 : 0.0) - p[j]);
            if (p[j] > 0.0) g += cfg.entropy_coef * p[j] * (std::log(p[j]) + h);
            dlogits[j] = g / n;
          }
          res.policy.backward(pc, dlogits, pgrad);

          Mlp::Cache vc;
          const double v = res.value.forward(t.state, &vc)[0];
          const double err = v - t.ret;
          value_loss += err * err;
          const double dv = cfg.value_coef * 2.0 * err / n;
          res.value.backward(vc, std::span<const double>(&dv, 1), vgrad);
        }
        require_finite(policy_loss, "policy loss", ep);
        require_finite(value_loss, "value loss", ep);
        popt.step(res.policy.params(), pgrad);
        vopt.step(res.value.params(), vgrad);
        log.value_loss = value_loss / n;
      }
      batch.clear();
    }
    res.log.push_back(log);
  }
  return res;
}

double evaluate_policy(Environment& env, const Mlp* policy, std::size_t episodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double total = 0.0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    auto state = env.reset();
    for (;;) {
      const auto mask = env.mask();
      if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) break;
      const std::size_t action = policy ? sample_action(*policy, state, mask, rng) : uniform_valid(mask, rng);
      auto sr = env.step(action);
      total += sr.reward;
      state = std::move(sr.state);
      if (sr.done) break;
    }
  }
  return episodes == 0 ? 0.0 : total / static_cast<double>(episodes);
}

void write_training_log(std::ostream& out, const std::vector<EpisodeLog>& log) {
  out << "episode,mean_reward,entropy,value_loss\n";
  for (const auto& l : log)
    out << l.episode << ',' << format_double(l.mean_reward) << ',' << format_double(l.entropy) << ','
        << format_double(l.value_loss) << '\n';
}

}  // namespace qatok
