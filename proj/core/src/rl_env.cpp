#include "qatok/rl_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qatok {

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size()));
}

std::size_t bin_of(double x, double lo, double hi) {
  if (!(hi > lo)) return 0;
  const double pos = (x - lo) / (hi - lo) * static_cast<double>(kHistogramBins);
  if (!(pos > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(pos), kHistogramBins - 1);
}

void normalize(std::span<double> h) {
  double s = 0.0;
  for (double x : h) s += x;
  if (s > 0.0)
    for (double& x : h) x /= s;
}

}  // namespace

LogFreqRange log_freq_range(const SegmentedCorpus& corpus) {
  LogFreqRange r;
  bool any = false;
  for (auto f : corpus.stats().token_freq) {
    if (f <= 0) continue;
    const double l = std::log(static_cast<double>(f));
    r.lo = any ? std::min(r.lo, l) : l;
    r.hi = any ? std::max(r.hi, l) : l;
    any = true;
  }
  return r;
}

std::vector<double> encode_state(const SegmentedCorpus& corpus, std::span<const Candidate> queue,
                                 std::size_t k_pq, std::size_t t, std::size_t horizon, LogFreqRange range) {
  std::vector<double> s;
  s.reserve(state_dimension(k_pq));

  const std::size_t v = corpus.token_count();
  std::vector<double> lens(v), quals(v);
  for (TokenId id = 0; id < v; ++id) {
    lens[id] = corpus.token_length(id);
    quals[id] = corpus.token_quality(id);
  }
  double ml, sl, mq, sq;
  mean_std(lens, ml, sl);
  mean_std(quals, mq, sq);
  s.push_back(static_cast<double>(v) / static_cast<double>(corpus.alphabet_size()));
  s.push_back(ml);
  s.push_back(sl);
  s.push_back(mq);
  s.push_back(sq);

  for (std::size_t i = 0; i < k_pq; ++i) {
    if (i < queue.size()) {
      const auto& c = queue[i];
      s.push_back(c.score);
      s.push_back(corpus.token_quality(c.pair.left));
      s.push_back(corpus.token_quality(c.pair.right));
      s.push_back(corpus.token_length(c.pair.left));
      s.push_back(corpus.token_length(c.pair.right));
      s.push_back(std::log(static_cast<double>(c.f_ab)));
    } else {
      s.insert(s.end(), 6, 0.0);
    }
  }

  std::vector<double> qh(kHistogramBins, 0.0), fh(kHistogramBins, 0.0);
  const auto& freq = corpus.stats().token_freq;
  for (TokenId id = 0; id < freq.size(); ++id) {
    if (freq[id] <= 0) continue;
    const double f = static_cast<double>(freq[id]);
    qh[bin_of(quals[id], 0.0, 1.0)] += f;
    fh[bin_of(std::log(f), range.lo, range.hi)] += 1.0;
  }
  normalize(qh);
  normalize(fh);
  s.insert(s.end(), qh.begin(), qh.end());
  s.insert(s.end(), fh.begin(), fh.end());

  s.push_back(horizon == 0 ? 0.0 : std::clamp(static_cast<double>(t) / static_cast<double>(horizon), 0.0, 1.0));
  return s;
}

TokenizationEnv::TokenizationEnv(std::vector<AtomicSequence> corpus, std::size_t alphabet_size, Domain domain,
                                 EnvConfig cfg)
    : base_(std::make_shared<const std::vector<AtomicSequence>>(std::move(corpus))),
      alphabet_size_(alphabet_size),
      domain_(domain),
      cfg_(std::move(cfg)),
      seg_(*base_, alphabet_size, domain, cfg_.score.eps_q),
      engine_(cfg_.reward) {
  if (cfg_.k_pq == 0) throw std::invalid_argument("K_PQ must be >= 1");
  cfg_.score.validate();
  reset();
}

std::vector<double> TokenizationEnv::reset() {
  seg_ = SegmentedCorpus(*base_, alphabet_size_, domain_, cfg_.score.eps_q);
  queue_ = build_priority_queue(seg_, cfg_.score, cfg_.k_pq);
  merges_.clear();
  range_ = log_freq_range(seg_);
  t_ = 0;
  return state();
}

std::vector<double> TokenizationEnv::state() const {
  return encode_state(seg_, queue_, cfg_.k_pq, t_, cfg_.horizon, range_);
}

std::vector<std::uint8_t> TokenizationEnv::mask() const {
  std::vector<std::uint8_t> m(cfg_.k_pq, 0);
  for (std::size_t i = 0; i < queue_.size() && i < m.size(); ++i) m[i] = 1;
  return m;
}

StepResult TokenizationEnv::step(std::size_t action) {
  if (t_ >= cfg_.horizon) throw std::logic_error("step on a finished episode");
  if (action >= queue_.size()) throw std::invalid_argument("action " + std::to_string(action) + " is a padded slot");
  const TokenPair pair = queue_[action].pair;
  StepResult r;
  r.reward = engine_.step(seg_, pair);
  seg_.apply_merge(pair, static_cast<TokenId>(seg_.token_count()));
  merges_.push_back(pair);
  ++t_;
  queue_ = build_priority_queue(seg_, cfg_.score, cfg_.k_pq);
  r.done = t_ >= cfg_.horizon || queue_.empty();
  r.state = state();
  return r;
}

BanditEnv::BanditEnv(std::size_t actions, std::size_t state_dim, std::size_t horizon, std::uint64_t seed)
    : actions_(actions), state_dim_(state_dim), horizon_(horizon), rng_(seed) {
  if (actions == 0 || state_dim == 0 || horizon == 0) throw std::invalid_argument("BanditEnv: sizes must be positive");
  good_ = std::uniform_int_distribution<std::size_t>(0, actions - 1)(rng_);
}

std::vector<double> BanditEnv::draw_state() {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> s(state_dim_);
  for (double& x : s) x = n(rng_);
  return s;
}

std::vector<double> BanditEnv::reset() {
  t_ = 0;
  return draw_state();
}

StepResult BanditEnv::step(std::size_t action) {
  if (action >= actions_) throw std::invalid_argument("BanditEnv: action out of range");
  if (t_ >= horizon_) throw std::logic_error("step on a finished episode");
  ++t_;
  return {draw_state(), action == good_ ? 1.0 : 0.0, t_ >= horizon_};
}

}  // namespace qatok
