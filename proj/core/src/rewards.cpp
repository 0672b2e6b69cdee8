#include "qatok/rewards.hpp"

#include "qatok/merge.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace qatok {

double ema_update(RewardStats& s, double raw) {
  const double normalized = (raw - s.mean) / (s.sigma() + s.eps);
  const double prev = s.mean;
  s.mean = (1.0 - s.beta) * prev + s.beta * raw;
  s.var = (1.0 - s.beta) * s.var + s.beta * (raw - prev) * (raw - s.mean);
  ++s.count;
  return normalized;
}

InformationReward raw_information_reward(double f_ab, double f_a, double f_b, double total, double eps_p) {
  if (!(total > 0.0)) throw std::invalid_argument("information reward: total tokens must be > 0");
  if (f_ab <= 0.0) return {std::log(eps_p), true};
  const double p_ab = f_ab / total;
  const double p_a = f_a / total;
  const double p_b = f_b / total;
  return {std::log(p_ab / (p_a * p_b + eps_p)), false};
}

double raw_quality_reward(const SegmentedCorpus& corpus, TokenPair pair) {
  return token_quality_on_merge(corpus, pair).quality;
}

double vol_scale(double sigma_curr, double sigma_hist, double beta_vol, double eps) {
  const double excess = std::max(0.0, (sigma_curr - sigma_hist) / (sigma_hist + eps));
  return std::pow(1.0 + excess, beta_vol);
}

double raw_complexity_penalty(Domain domain, std::uint32_t merged_length, std::size_t vocab_size,
                              double beta_vol, double sigma_curr, double sigma_hist) {
  if (merged_length == 0) throw std::invalid_argument("complexity penalty: length must be >= 1");
  const double len = static_cast<double>(merged_length);
  if (domain == Domain::genomics) return -len;
  return -len * std::log(static_cast<double>(vocab_size) + 1.0) * vol_scale(sigma_curr, sigma_hist, beta_vol);
}

double jaccard(const Interval& a, const Interval& b) {
  if (a.seq != b.seq) return 0.0;
  const std::size_t lo = std::max(a.begin, b.begin);
  const std::size_t hi = std::min(a.end, b.end);
  const double inter = hi > lo ? static_cast<double>(hi - lo) : 0.0;
  const double uni = static_cast<double>(a.end - a.begin) + static_cast<double>(b.end - b.begin) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Interval> merge_occurrence_spans(const SegmentedCorpus& corpus, TokenPair pair) {
  std::vector<Interval> spans;
  if (corpus.stats().freq(pair) == 0) return spans;
  const auto& lengths = corpus.token_lengths();
  const auto& seg = corpus.segmentation();
  for (std::size_t s = 0; s < seg.size(); ++s) {
    const auto& toks = seg[s];
    std::size_t offset = 0;
    for (std::size_t i = 0; i < toks.size();) {
      if (i + 1 < toks.size() && toks[i] == pair.left && toks[i + 1] == pair.right) {
        const std::size_t len = lengths[toks[i]] + lengths[toks[i + 1]];
        spans.push_back({s, offset, offset + len});
        offset += len;
        i += 2;
      } else {
        offset += lengths[toks[i]];
        ++i;
      }
    }
  }
  return spans;
}

std::optional<double> genomic_domain_reward(const SegmentedCorpus& corpus, TokenPair pair,
                                            std::span<const Interval> features) {
  if (features.empty()) return std::nullopt;
  const auto spans = merge_occurrence_spans(corpus, pair);
  if (spans.empty()) return 0.0;
  double total = 0.0;
  for (const auto& occ : spans) {
    double best = 0.0;
    for (const auto& f : features) best = std::max(best, jaccard(occ, f));
    total += best;
  }
  return total / static_cast<double>(spans.size());
}

double plugin_mutual_information(std::span<const std::uint8_t> x, std::span<const int> y) {
  if (x.size() != y.size()) throw std::invalid_argument("mutual information: size mismatch");
  if (x.empty()) return 0.0;
  std::array<std::array<double, 3>, 2> joint{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] < 0 || y[i] > 2) throw std::invalid_argument("mutual information: label outside {0,1,2}");
    joint[x[i] ? 1 : 0][static_cast<std::size_t>(y[i])] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  std::array<double, 2> px{};
  std::array<double, 3> py{};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      px[a] += joint[a][b] / n;
      py[b] += joint[a][b] / n;
    }
  double mi = 0.0;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      const double p = joint[a][b] / n;
      if (p > 0.0) mi += p * std::log(p / (px[a] * py[b]));
    }
  return std::max(0.0, mi);
}

std::optional<double> finance_token_mi(const SegmentedCorpus& corpus, TokenPair pair,
                                       const std::vector<std::vector<int>>& labels) {
  if (labels.empty()) return std::nullopt;
  const auto& seg = corpus.segmentation();
  if (labels.size() != seg.size()) throw std::invalid_argument("return labels: one list per sequence required");
  std::vector<std::vector<std::uint8_t>> covered(seg.size());
  for (std::size_t s = 0; s < seg.size(); ++s) covered[s].assign(labels[s].size(), 0);
  for (const auto& span : merge_occurrence_spans(corpus, pair)) {
    if (span.end > covered[span.seq].size())
      throw std::invalid_argument("return labels shorter than sequence " + std::to_string(span.seq));
    std::fill(covered[span.seq].begin() + static_cast<std::ptrdiff_t>(span.begin),
              covered[span.seq].begin() + static_cast<std::ptrdiff_t>(span.end), 1);
  }
  std::vector<std::uint8_t> x;
  std::vector<int> y;
  for (std::size_t s = 0; s < seg.size(); ++s) {
    x.insert(x.end(), covered[s].begin(), covered[s].end());
    y.insert(y.end(), labels[s].begin(), labels[s].end());
  }
  return plugin_mutual_information(x, y);
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("percentile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double MiNormalizer::peek(double mi) const {
  std::vector<double> vals(ring_.begin(), ring_.end());
  if (vals.size() == capacity_) vals.erase(vals.begin());
  vals.push_back(mi);
  return mi / (percentile(std::move(vals), 0.95) + eps_);
}

double MiNormalizer::commit(double mi) {
  const double out = peek(mi);
  ring_.push_back(mi);
  if (ring_.size() > capacity_) ring_.pop_front();
  return out;
}

RewardWeights RewardWeights::from_weights(std::vector<std::string> names, const std::vector<double>& lambdas) {
  if (names.size() != lambdas.size()) throw std::invalid_argument("reward weights: names/values mismatch");
  RewardWeights w;
  w.names = std::move(names);
  for (double l : lambdas) {
    if (!(l > 0.0)) throw std::invalid_argument("reward weights must be > 0");
    w.logits.push_back(std::log(l));
  }
  return w;
}

std::vector<double> RewardWeights::weights() const {
  if (logits.empty()) return {};
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (w[i] = std::exp(logits[i] - m));
  for (double& x : w) x /= z;
  return w;
}

double RewardWeights::weight(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("no reward weight named '" + name + "'");
  return weights()[static_cast<std::size_t>(it - names.begin())];
}

double RewardWeights::total(const std::map<std::string, double>& components) const {
  if (names.size() != logits.size()) throw std::invalid_argument("reward weights: names/logits mismatch");
  std::vector<double> present_logits;
  std::vector<double> values;
  for (const auto& [name, value] : components) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("reward component '" + name + "' has no weight");
    present_logits.push_back(logits[static_cast<std::size_t>(it - names.begin())]);
    values.push_back(value);
  }
  if (values.empty()) return 0.0;
  RewardWeights sub{{}, present_logits};
  const auto w = sub.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += w[i] * values[i];
  return sum;
}

RewardWeights default_reward_weights(Domain domain) {
  std::vector<std::string> names{kRewardQuality, kRewardInformation, kRewardComplexity, kRewardDomain};
  if (domain == Domain::genomics) return RewardWeights::from_weights(names, {0.35, 0.25, 0.15, 0.25});
  return RewardWeights::from_weights(names, {0.30, 0.20, 0.10, 0.40});
}

RewardEngine::RewardEngine(RewardConfig cfg) : cfg_(std::move(cfg)) {
  for (const auto& name : cfg_.weights.names) {
    RewardStats s;
    s.beta = cfg_.beta_norm;
    stats_[name] = s;
  }
}

std::map<std::string, double> RewardEngine::raw(const SegmentedCorpus& corpus, TokenPair pair) const {
  const auto& st = corpus.stats();
  std::map<std::string, double> out;
  out[kRewardQuality] = raw_quality_reward(corpus, pair);
  out[kRewardInformation] =
      raw_information_reward(static_cast<double>(st.freq(pair)), static_cast<double>(st.freq(pair.left)),
                             static_cast<double>(st.freq(pair.right)),
                             static_cast<double>(std::max<std::int64_t>(st.total_tokens, 1)), cfg_.eps_p)
          .value;
  out[kRewardComplexity] =
      raw_complexity_penalty(cfg_.domain, corpus.token_length(pair.left) + corpus.token_length(pair.right),
                             corpus.token_count(), cfg_.beta_vol, cfg_.sigma_curr, cfg_.sigma_hist);
  if (cfg_.domain == Domain::genomics) {
    if (auto d = genomic_domain_reward(corpus, pair, cfg_.features)) out[kRewardDomain] = *d;
  } else {
    if (auto mi = finance_token_mi(corpus, pair, cfg_.return_labels)) out[kRewardDomain] = mi_.peek(*mi);
  }
  return out;
}

double RewardEngine::step(const SegmentedCorpus& corpus, TokenPair pair) {
  auto comps = raw(corpus, pair);
  if (cfg_.domain == Domain::finance && comps.count(kRewardDomain)) {
    comps[kRewardDomain] = mi_.commit(*finance_token_mi(corpus, pair, cfg_.return_labels));
  }
  std::map<std::string, double> normalized;
  for (const auto& [name, value] : comps) {
    auto it = stats_.find(name);
    if (it == stats_.end()) throw std::invalid_argument("reward component '" + name + "' has no weight");
    const double z = ema_update(it->second, value);
    normalized[name] = z;
    trace_.push_back({steps_, name, value, z});
  }
  ++steps_;
  return cfg_.weights.total(normalized);
}

}  // namespace qatok
