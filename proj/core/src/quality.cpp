#include "qatok/quality.hpp"

#include "qatok/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qatok {

void GenomicQualityParams::validate() const {
  if (!(beta_pos >= 0.0)) throw ConfigError("beta_pos must be >= 0");
  if (!(eps_len > 0.0) || !(eps_q > 0.0)) throw ConfigError("genomic epsilons must be > 0");
}

void FinanceQualityParams::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("finance quality weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("finance quality weights must sum to 1");
  if (!(beta_vol >= 0.0)) throw ConfigError("beta_vol must be >= 0");
  if (!(gamma_vol > 0.0 && gamma_vol < 1.0)) throw ConfigError("gamma_vol must lie in (0,1)");
  if (!(alpha_spread > 0.0)) throw ConfigError("alpha_spread must be > 0");
  if (vol_lookback == 0) throw ConfigError("vol_lookback must be positive");
}

double clamp_unit(double x) {
  if (std::isnan(x)) return 0.0;
  return std::clamp(x, 0.0, 1.0);
}

double phred_to_quality(int phred) {
  if (phred < 0 || phred > 93)
    throw ParseError("phred score " + std::to_string(phred) + " outside [0, 93]");
  return 1.0 - std::pow(10.0, -phred / 10.0);
}

double position_decay_distance(std::size_t i, std::size_t length, double eps_len) {
  const double center = (static_cast<double>(length) - 1.0) / 2.0;
  return std::abs(static_cast<double>(i) - center) / (center + eps_len);
}

double position_adjust(double q, std::size_t i, std::size_t length, const GenomicQualityParams& p) {
  if (length == 0 || i >= length) throw std::out_of_range("position_adjust: index outside read");
  return q * std::exp(-p.beta_pos * position_decay_distance(i, length, p.eps_len));
}

std::vector<double> position_adjust_all(std::span<const double> q, const GenomicQualityParams& p) {
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = position_adjust(q[i], i, q.size(), p);
  return out;
}

double geometric_token_quality(std::span<const double> adjusted, double eps_q) {
  if (adjusted.empty()) throw std::invalid_argument("geometric_token_quality: empty token");
  double log_sum = 0.0;
  for (double q : adjusted) log_sum += std::log(q + eps_q);
  return clamp_unit(std::exp(log_sum / static_cast<double>(adjusted.size())));
}

double arithmetic_token_quality(std::span<const double> qualities) {
  if (qualities.empty()) throw std::invalid_argument("arithmetic_token_quality: empty token");
  double sum = std::accumulate(qualities.begin(), qualities.end(), 0.0);
  return clamp_unit(sum / static_cast<double>(qualities.size()));
}

FinanceComponents finance_components(const FinanceWindow& w, const FinanceContext& ctx,
                                     const FinanceQualityParams& p) {
  if (!ctx.median_volume || !ctx.sigma_log_volume || !ctx.expected_vol || !ctx.info_quality)
    throw std::invalid_argument("finance quality: missing context statistics");
  if (!(w.mid_price > 0.0)) throw std::invalid_argument("finance quality: mid price must be positive");
  if (!(w.volume > 0.0) || !(*ctx.median_volume > 0.0))
    throw std::invalid_argument("finance quality: volumes must be positive");

  FinanceComponents c;
  const double sigma = std::clamp(*ctx.sigma_log_volume, 0.1, 10.0);
  const double z = std::log(w.volume / *ctx.median_volume) / sigma;
  c.liquidity = 1.0 / (1.0 + std::exp(-z));
  c.signal = std::max(0.0, 1.0 - std::abs(w.spread) / (w.mid_price * p.alpha_spread));
  const double expected = *ctx.expected_vol;
  c.vol_ratio = w.realized_vol <= 0.0 ? 0.0 : w.realized_vol / std::max(expected, 1e-12);
  c.stability = std::exp(-p.beta_vol * c.vol_ratio);
  c.information = clamp_unit(*ctx.info_quality);
  return c;
}

double finance_element_quality(const FinanceWindow& w, const FinanceContext& ctx,
                               const FinanceQualityParams& p) {
  const auto c = finance_components(w, ctx, p);
  const auto& wk = p.weights;
  return clamp_unit(wk[kLiquidity] * c.liquidity + wk[kSignal] * c.signal +
                    wk[kStability] * c.stability + wk[kInformation] * c.information);
}

FinanceContextTracker::FinanceContextTracker(FinanceQualityParams p, double info_quality)
    : params_(p), info_quality_(info_quality) {
  params_.validate();
}

FinanceContext FinanceContextTracker::next(const FinanceWindow& w) {
  volumes_.push_back(w.volume);
  if (volumes_.size() > params_.vol_lookback) volumes_.pop_front();

  std::vector<double> sorted(volumes_.begin(), volumes_.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  double mean_log = 0.0;
  for (double v : volumes_) mean_log += std::log(v);
  mean_log /= static_cast<double>(n);
  double var_log = 0.0;
  for (double v : volumes_) var_log += (std::log(v) - mean_log) * (std::log(v) - mean_log);
  var_log /= static_cast<double>(n);

  if (!expected_vol_) {
    expected_vol_ = w.realized_vol;
  } else {
    expected_vol_ = params_.gamma_vol * *expected_vol_ + (1.0 - params_.gamma_vol) * *last_realized_;
  }
  last_realized_ = w.realized_vol;

  FinanceContext ctx;
  ctx.median_volume = median;
  ctx.sigma_log_volume = std::clamp(std::sqrt(var_log), 0.1, 10.0);
  ctx.expected_vol = *expected_vol_;
  ctx.info_quality = info_quality_;
  return ctx;
}

}  // namespace qatok
