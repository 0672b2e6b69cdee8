#include "qatok/adaptive.hpp"

#include "qatok/common.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace qatok {

namespace {

const char* const kQualityNames[4] = {"liquidity", "signal", "stability", "information"};

std::vector<double> softmax_values(std::span<const double> logits) {
  std::vector<double> zero(logits.size(), 0.0);
  return gumbel_softmax(logits, zero, 1.0);
}

}  // namespace

AdaptiveParams AdaptiveParams::defaults(Domain domain) {
  AdaptiveParams p;
  p.alpha = domain == Domain::genomics ? 0.72 : 0.95;
  p.beta_pos = 0.014;
  p.beta_vol = 0.50;
  const FinanceQualityParams fq;
  for (std::size_t k = 0; k < 4; ++k) p.quality_logits[k] = std::log(fq.weights[k]);
  const auto rw = default_reward_weights(domain);
  p.reward_names = rw.names;
  p.reward_logits = rw.logits;
  return p;
}

std::array<double, 4> AdaptiveParams::quality_weights() const {
  const auto w = softmax_values(quality_logits);
  return {w[0], w[1], w[2], w[3]};
}

RewardWeights AdaptiveParams::reward_weights() const { return {reward_names, reward_logits}; }

void AdaptiveParams::project() {
  alpha = std::max(0.0, alpha);
  beta_pos = std::max(0.0, beta_pos);
  beta_vol = std::max(0.0, beta_vol);
}

void AdaptiveParams::validate() const {
  if (!(alpha >= 0.0) || !(beta_pos >= 0.0) || !(beta_vol >= 0.0))
    throw ConfigError("alpha, beta_pos and beta_vol must be >= 0");
  if (!(lambda_reg >= 0.0)) throw ConfigError("lambda_reg must be >= 0");
  if (reward_names.size() != reward_logits.size()) throw ConfigError("reward names/logits mismatch");
  for (double l : quality_logits)
    if (!std::isfinite(l)) throw ConfigError("quality logits must be finite");
  for (double l : reward_logits)
    if (!std::isfinite(l)) throw ConfigError("reward logits must be finite");
}

std::string serialize_params(const AdaptiveParams& p) {
  std::string body;
  auto line = [&](const std::string& name, double v) { body += name + ' ' + format_double(v) + '\n'; };
  line("alpha", p.alpha);
  line("beta_pos", p.beta_pos);
  line("beta_vol", p.beta_vol);
  for (std::size_t k = 0; k < 4; ++k) line(std::string("quality_logit.") + kQualityNames[k], p.quality_logits[k]);
  for (std::size_t j = 0; j < p.reward_names.size(); ++j) line("reward_logit." + p.reward_names[j], p.reward_logits[j]);
  line("lambda_reg", p.lambda_reg);
  return body + "checksum " + crc32_hex(body) + '\n';
}

AdaptiveParams parse_params(const std::string& text) {
  const auto pos = text.rfind("checksum ");
  if (pos == std::string::npos || (pos > 0 && text[pos - 1] != '\n'))
    throw ParseError("params checkpoint: missing checksum line");
  const std::string body = text.substr(0, pos);
  std::string tail = text.substr(pos + 9);
  while (!tail.empty() && (tail.back() == '\n' || tail.back() == '\r')) tail.pop_back();
  if (tail != crc32_hex(body)) throw ParseError("params checkpoint: checksum mismatch");

  AdaptiveParams p;
  bool seen[5] = {};
  bool seen_q[4] = {};
  std::istringstream in(body);
  std::string name, value;
  long record = 0;
  while (in >> name >> value) {
    double v;
    try {
      v = parse_double(value);
    } catch (const ParseError&) {
      throw ParseError("params checkpoint: bad value for " + name, record);
    }
    if (name == "alpha") p.alpha = v, seen[0] = true;
    else if (name == "beta_pos") p.beta_pos = v, seen[1] = true;
    else if (name == "beta_vol") p.beta_vol = v, seen[2] = true;
    else if (name == "lambda_reg") p.lambda_reg = v, seen[3] = true;
    else if (name.rfind("quality_logit.", 0) == 0) {
      const std::string k = name.substr(14);
      bool ok = false;
      for (std::size_t i = 0; i < 4; ++i)
        if (k == kQualityNames[i]) p.quality_logits[i] = v, seen_q[i] = ok = true;
      if (!ok) throw ParseError("params checkpoint: unknown quality weight " + k, record);
    } else if (name.rfind("reward_logit.", 0) == 0) {
      p.reward_names.push_back(name.substr(13));
      p.reward_logits.push_back(v);
      seen[4] = true;
    } else {
      throw ParseError("params checkpoint: unknown parameter " + name, record);
    }
    ++record;
  }
  for (bool s : seen)
    if (!s) throw ParseError("params checkpoint: missing parameter");
  for (bool s : seen_q)
    if (!s) throw ParseError("params checkpoint: missing quality weight");
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("params checkpoint: ") + e.what());
  }
  return p;
}

double AnnealSchedule::tau(std::size_t t) const {
  const double T = static_cast<double>(std::max<std::size_t>(total_steps, 1));
  return std::max(tau_final, tau_init * std::exp(-beta_anneal * static_cast<double>(t) / T));
}

double GumbelNoise::operator()() {
  if (zero_) return 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng_);
  while (x <= 0.0) x = u(rng_);
  return -std::log(-std::log(x));
}

double composite_logit(double w_ab, std::span<const double> rewards, std::span<const double> lambdas) {
  if (rewards.size() != lambdas.size()) throw std::invalid_argument("composite_logit: size mismatch");
  double l = w_ab;
  for (std::size_t j = 0; j < rewards.size(); ++j) l += lambdas[j] * rewards[j];
  return l;
}

std::vector<double> gumbel_softmax(std::span<const double> logits, std::span<const double> noise, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: tau must be > 0");
  if (logits.size() != noise.size()) throw std::invalid_argument("gumbel_softmax: noise size mismatch");
  std::vector<double> z(logits.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (logits[i] + noise[i]) / tau;
  if (z.empty()) return z;
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& x : z) total += (x = std::exp(x - m));
  for (double& x : z) x /= total;
  return z;
}

std::vector<double> gumbel_softmax_sample(std::span<const double> logits, double tau, GumbelNoise& noise) {
  std::vector<double> g(logits.size());
  for (double& x : g) x = noise();
  return gumbel_softmax(logits, g, tau);
}

std::vector<std::vector<double>> gumbel_jacobian(std::span<const double> y, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_jacobian: tau must be > 0");
  std::vector<std::vector<double>> j(y.size(), std::vector<double>(y.size()));
  for (std::size_t a = 0; a < y.size(); ++a)
    for (std::size_t b = 0; b < y.size(); ++b) j[a][b] = y[a] * ((a == b ? 1.0 : 0.0) - y[b]) / tau;
  return j;
}

ParamVars ParamVars::record(Tape& tape, const AdaptiveParams& p) {
  ParamVars v;
  v.alpha = tape.variable(p.alpha);
  v.beta_pos = tape.variable(p.beta_pos);
  v.beta_vol = tape.variable(p.beta_vol);
  for (std::size_t k = 0; k < 4; ++k) v.quality_logits[k] = tape.variable(p.quality_logits[k]);
  for (double l : p.reward_logits) v.reward_logits.push_back(tape.variable(l));
  v.reward_names = p.reward_names;
  return v;
}

namespace {

struct Occ {
  TokenId type;
  std::size_t begin, end;
};

struct CandidateVars {
  TokenPair pair;
  Var logit;
  Var quality;
  double length = 0.0;
  double pmi = 0.0;
};

Var mean_of(std::span<const Var> xs) { return sum(xs) / static_cast<double>(xs.size()); }

Var standardize(const std::vector<Var>& xs, std::size_t i) {
  const Var m = mean_of(xs);
  std::vector<Var> sq;
  for (const auto& x : xs) sq.push_back((x - m) * (x - m));
  const Var var = mean_of(sq);
  const Var sd = exp(log(var + 1e-16) * 0.5);
  return (xs[i] - m) / (sd + 1e-8);
}

}  // namespace

SoftSummary soft_tokenize(Tape& tape, const ParamVars& theta, const AdaptiveSample& sample,
                          std::size_t alphabet_size, double tau, const SoftConfig& cfg, GumbelNoise& noise) {
  const auto& seq = sample.seq;
  const std::size_t n = seq.size();
  if (cfg.k_candidates == 0) throw std::invalid_argument("soft_tokenize: k must be >= 1");
  for (SymbolId s : seq.elements)
    if (s >= alphabet_size) throw std::invalid_argument("soft_tokenize: symbol outside alphabet");

  // Element qualities and per-element accumulators as functions of theta.
  std::vector<Var> q(n), acc(n);
  if (cfg.domain == Domain::genomics) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = position_decay_distance(i, n, cfg.eps_len);
      q[i] = exp(theta.beta_pos * (-d)) * seq.qualities[i];
      acc[i] = log(q[i] + cfg.eps_q);
    }
  } else {
    if (sample.components.size() != n) throw std::invalid_argument("soft_tokenize: finance sample lacks components");
    const auto w = softmax(theta.quality_logits);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = sample.components[i];
      const Var stab = exp(theta.beta_vol * (-c.vol_ratio));
      q[i] = w[0] * c.liquidity + w[1] * c.signal + w[2] * stab + w[3] * c.information;
      acc[i] = q[i];
    }
  }

  auto occurrence_quality = [&](std::size_t b, std::size_t e) {
    const Var s = sum(std::span<const Var>(acc.data() + b, e - b));
    const Var mean = s / static_cast<double>(e - b);
    return cfg.domain == Domain::genomics ? exp(mean) : mean;
  };

  // Reward weights over the components present here (no annotations).
  std::vector<std::string> present;
  std::vector<Var> present_logits;
  for (std::size_t j = 0; j < theta.reward_names.size(); ++j) {
    const auto& name = theta.reward_names[j];
    if (name == kRewardQuality || name == kRewardInformation || name == kRewardComplexity) {
      present.push_back(name);
      present_logits.push_back(theta.reward_logits[j]);
    }
  }
  const auto lambdas = softmax(present_logits);

  std::vector<Occ> toks;
  toks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) toks.push_back({seq.elements[i], i, i + 1});
  std::size_t vocab = alphabet_size;

  SoftSummary out;
  std::vector<Var> step_q, step_len, step_pmi;
  for (std::size_t step = 0; step < cfg.steps && toks.size() >= 2; ++step) {
    std::map<TokenId, std::int64_t> f;
    std::map<TokenPair, std::int64_t> fp;
    std::map<TokenId, std::vector<Var>> occ_q;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      ++f[toks[i].type];
      occ_q[toks[i].type].push_back(occurrence_quality(toks[i].begin, toks[i].end));
      if (i + 1 < toks.size()) ++fp[{toks[i].type, toks[i + 1].type}];
    }
    std::map<TokenId, Var> qt;
    for (const auto& [t, list] : occ_q) qt[t] = mean_of(list);
    const double total = static_cast<double>(toks.size());

    std::vector<CandidateVars> cands;
    std::vector<std::vector<Var>> rewards(present.size());
    for (const auto& [pair, f_ab] : fp) {
      CandidateVars c;
      c.pair = pair;
      std::size_t len_a = 0, len_b = 0;
      std::vector<Var> span_acc;
      std::size_t span_len = 0;
      for (std::size_t i = 0; i + 1 < toks.size();) {
        if (toks[i].type == pair.left && toks[i + 1].type == pair.right) {
          len_a = toks[i].end - toks[i].begin;
          len_b = toks[i + 1].end - toks[i + 1].begin;
          for (std::size_t k = toks[i].begin; k < toks[i + 1].end; ++k) span_acc.push_back(acc[k]);
          span_len += toks[i + 1].end - toks[i].begin;
          i += 2;
        } else {
          ++i;
        }
      }
      const Var qa = qt.at(pair.left), qb = qt.at(pair.right);
      if (cfg.domain == Domain::genomics) {
        c.quality = exp(sum(span_acc) / static_cast<double>(span_len));
      } else {
        c.quality = (qa * static_cast<double>(len_a) + qb * static_cast<double>(len_b)) /
                    static_cast<double>(len_a + len_b);
      }
      c.length = static_cast<double>(len_a + len_b);
      const double fa = static_cast<double>(f.at(pair.left)), fb = static_cast<double>(f.at(pair.right));
      c.pmi = raw_information_reward(static_cast<double>(f_ab), fa, fb, total, cfg.eps_p).value;
      const double assoc = static_cast<double>(f_ab) / (fa * fb + cfg.eps_f);
      const Var w = pow((qa + qb) * 0.5 + cfg.eps_q, theta.alpha) * assoc;
      const double complexity = raw_complexity_penalty(cfg.domain, static_cast<std::uint32_t>(c.length), vocab);
      for (std::size_t j = 0; j < present.size(); ++j) {
        if (present[j] == kRewardQuality) rewards[j].push_back(c.quality);
        else if (present[j] == kRewardInformation) rewards[j].push_back(tape.constant(c.pmi));
        else rewards[j].push_back(tape.constant(complexity));
      }
      c.logit = w;
      cands.push_back(c);
    }
    for (std::size_t i = 0; i < cands.size(); ++i) {
      for (std::size_t j = 0; j < present.size(); ++j) {
        const Var r = cfg.batch_norm_rewards ? standardize(rewards[j], i) : rewards[j][i];
        cands[i].logit = cands[i].logit + lambdas[j] * r;
      }
    }

    std::vector<std::size_t> order(cands.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cands[a].logit.value() > cands[b].logit.value();
    });
    const std::size_t k = std::min(cfg.k_candidates, order.size());
    std::vector<Var> logits;
    std::vector<double> g(k);
    for (std::size_t i = 0; i < k; ++i) {
      logits.push_back(cands[order[i]].logit);
      g[i] = noise();
    }
    if (step == 0)
      for (const auto& l : logits) out.first_logits.push_back(l.value());
    const auto y = tape.gumbel_softmax(logits, g, tau);

    std::size_t hard = 0;
    for (std::size_t i = 1; i < k; ++i)
      if (logits[i].value() + g[i] > logits[hard].value() + g[hard]) hard = i;

    std::vector<Var> mq, ml, mp;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& c = cands[order[i]];
      mq.push_back(y[i] * c.quality);
      ml.push_back(y[i] * c.length);
      mp.push_back(y[i] * c.pmi);
    }
    step_q.push_back(sum(mq));
    step_len.push_back(sum(ml));
    step_pmi.push_back(sum(mp));

    const TokenPair chosen = cands[order[hard]].pair;
    out.hard_path.push_back(chosen);
    const auto new_type = static_cast<TokenId>(vocab++);
    std::vector<Occ> next;
    next.reserve(toks.size());
    for (std::size_t i = 0; i < toks.size();) {
      if (i + 1 < toks.size() && toks[i].type == chosen.left && toks[i + 1].type == chosen.right) {
        next.push_back({new_type, toks[i].begin, toks[i + 1].end});
        i += 2;
      } else {
        next.push_back(toks[i++]);
      }
    }
    toks = std::move(next);
    ++out.steps_taken;
  }

  if (out.steps_taken == 0) {
    out.quality = n ? mean_of(q) : tape.constant(0.0);
    out.length = tape.constant(1.0);
    out.pmi = tape.constant(0.0);
  } else {
    out.quality = mean_of(step_q);
    out.length = mean_of(step_len);
    out.pmi = mean_of(step_pmi);
  }
  return out;
}

TaskLoss quality_threshold_loss(double kappa, double threshold) {
  return [kappa, threshold](const SoftSummary& s, int label) {
    const Var z = (s.quality - threshold) * kappa;
    const Var p = sigmoid(z);
    return label ? -log(p + 1e-12) : -log((1.0 - p) + 1e-12);
  };
}

std::vector<double> flatten(const AdaptiveParams& p) {
  std::vector<double> t{p.alpha, p.beta_pos, p.beta_vol};
  t.insert(t.end(), p.quality_logits.begin(), p.quality_logits.end());
  t.insert(t.end(), p.reward_logits.begin(), p.reward_logits.end());
  return t;
}

void unflatten(std::span<const double> t, AdaptiveParams& p) {
  if (t.size() != 7 + p.reward_logits.size()) throw std::invalid_argument("unflatten: size mismatch");
  p.alpha = t[0];
  p.beta_pos = t[1];
  p.beta_vol = t[2];
  for (std::size_t k = 0; k < 4; ++k) p.quality_logits[k] = t[3 + k];
  for (std::size_t j = 0; j < p.reward_logits.size(); ++j) p.reward_logits[j] = t[7 + j];
}

LossAndGrad task_loss_and_grad(const TaskLoss& task, std::span<const AdaptiveSample> data, std::size_t alphabet_size,
                               const AdaptiveParams& p, double tau, const SoftConfig& cfg, std::uint64_t noise_seed,
                               bool zero_noise) {
  const std::size_t dim = 7 + p.reward_logits.size();
  std::vector<double> losses(data.size(), 0.0);
  std::vector<std::vector<double>> grads(data.size(), std::vector<double>(dim, 0.0));

  auto run = [&](std::size_t i) {
    Tape tape;
    const auto theta = ParamVars::record(tape, p);
    GumbelNoise noise = zero_noise ? GumbelNoise::zero() : GumbelNoise(derive_seed(noise_seed, std::to_string(i)));
    const auto summary = soft_tokenize(tape, theta, data[i], alphabet_size, tau, cfg, noise);
    const Var loss = task(summary, data[i].label);
    losses[i] = loss.value();
    const auto adj = tape.gradient(loss);
    std::vector<Var> ids{theta.alpha, theta.beta_pos, theta.beta_vol};
    ids.insert(ids.end(), theta.quality_logits.begin(), theta.quality_logits.end());
    ids.insert(ids.end(), theta.reward_logits.begin(), theta.reward_logits.end());
    for (std::size_t k = 0; k < dim; ++k) grads[i][k] = adj[ids[k].id];
  };

  const unsigned threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(std::max<std::size_t>(data.size(), 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < data.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < data.size(); i += threads) run(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  LossAndGrad out;
  out.grad.assign(dim, 0.0);
  if (data.empty()) return out;
  const double nd = static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.task_loss += losses[i] / nd;
    for (std::size_t k = 0; k < dim; ++k) out.grad[k] += grads[i][k] / nd;
  }
  return out;
}

TrainAdaptiveResult train_adaptive(const TaskLoss& task, std::span<const AdaptiveSample> data,
                                   std::size_t alphabet_size, AdaptiveParams p0, const TrainAdaptiveConfig& cfg) {
  if (!(cfg.eta0 >= 0.0)) throw ConfigError("stage2 eta0 must be >= 0");
  p0.validate();
  TrainAdaptiveResult res;
  res.params = p0;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    const double tau = cfg.schedule.tau(it - 1);
    const auto lg = task_loss_and_grad(task, data, alphabet_size, res.params, tau, cfg.soft,
                                       derive_seed(cfg.seed, "stage2.iter." + std::to_string(it)), false);
    auto theta = flatten(res.params);
    double reg = 0.0;
    for (double x : theta) reg += x * x;
    const double total = lg.task_loss + res.params.lambda_reg * reg;
    bool finite = std::isfinite(total);
    for (double g : lg.grad) finite = finite && std::isfinite(g);
    if (!finite)
      throw AdaptiveDivergenceError("stage 2 diverged at iteration " + std::to_string(it) + " (non-finite loss)",
                                    res.params);
    res.trace.push_back({it, tau, lg.task_loss, total, res.params.alpha});

    const double eta = cfg.eta0 / std::sqrt(static_cast<double>(it));
    for (std::size_t k = 0; k < theta.size(); ++k) {
      if (cfg.freeze_alpha && k == 0) continue;
      theta[k] -= eta * (lg.grad[k] + 2.0 * res.params.lambda_reg * theta[k]);
    }
    AdaptiveParams next = res.params;
    unflatten(theta, next);
    next.project();
    for (double x : flatten(next))
      if (!std::isfinite(x))
        throw AdaptiveDivergenceError("stage 2 diverged at iteration " + std::to_string(it) +
                                          " (non-finite parameter)",
                                      res.params);
    res.params = next;
  }
  return res;
}

double evaluate_task_loss(const TaskLoss& task, std::span<const AdaptiveSample> data, std::size_t alphabet_size,
                          const AdaptiveParams& p, double tau, const SoftConfig& cfg) {
  return task_loss_and_grad(task, data, alphabet_size, p, tau, cfg, 0, true).task_loss;
}

std::size_t quality_task_alphabet(const QualityTaskSpec& spec) { return kMotifSymbols + spec.noise_symbols; }

std::vector<AdaptiveSample> make_quality_task(const QualityTaskSpec& spec, std::uint64_t seed) {
  if (spec.noise_symbols < 2 || spec.motif_repeats == 0) throw std::invalid_argument("quality task: bad spec");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  std::uniform_int_distribution<std::size_t> noise_sym(0, spec.noise_symbols - 1);
  std::uniform_int_distribution<std::size_t> gap(0, spec.motif_repeats);

  std::vector<AdaptiveSample> out;
  for (std::size_t w = 0; w < spec.windows; ++w) {
    const bool clean = u(rng) < 0.5;
    std::vector<std::size_t> insert_at;
    for (std::size_t k = 0; k < spec.noise_pairs; ++k) insert_at.push_back(gap(rng));
    std::sort(insert_at.begin(), insert_at.end());

    AdaptiveSample s;
    s.seq.source_id = "window" + std::to_string(w);
    auto push = [&](SymbolId sym, bool noisy) {
      s.seq.elements.push_back(sym);
      double q;
      if (clean) q = noisy ? uni(0.02, 0.10) : uni(0.85, 0.99);
      else q = uni(0.05, 0.35);
      s.seq.qualities.push_back(q);
    };
    std::size_t next_insert = 0;
    for (std::size_t r = 0; r <= spec.motif_repeats; ++r) {
      while (next_insert < insert_at.size() && insert_at[next_insert] == r) {
        const auto x = noise_sym(rng);
        auto y = noise_sym(rng);
        while (y == x) y = noise_sym(rng);
        push(static_cast<SymbolId>(kMotifSymbols + x), true);
        push(static_cast<SymbolId>(kMotifSymbols + y), true);
        ++next_insert;
      }
      if (r == spec.motif_repeats) break;
      for (SymbolId m = 0; m < kMotifSymbols; ++m) push(m, false);
    }
    double mean = 0.0;
    for (double q : s.seq.qualities) mean += q;
    mean /= static_cast<double>(s.seq.size());
    s.label = mean > 0.5 ? 1 : 0;
    out.push_back(std::move(s));
  }
  return out;
}

void write_loss_trace(std::ostream& out, const std::vector<LossTraceRow>& trace) {
  out << "iter,tau,task_loss,total_loss,alpha\n";
  for (const auto& r : trace)
    out << r.iter << ',' << format_double(r.tau) << ',' << format_double(r.task_loss) << ','
        << format_double(r.total_loss) << ',' << format_double(r.alpha) << '\n';
}

}  // namespace qatok
