#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace qatok {

struct GenomicQualityParams {
  double beta_pos = 0.014;
  double eps_len = 1e-6;
  double eps_q = 1e-8;

  void validate() const;
};

/// Component order used throughout: liquidity, signal, stability, information.
enum FinanceComponent : std::size_t { kLiquidity = 0, kSignal = 1, kStability = 2, kInformation = 3 };

struct FinanceQualityParams {
  std::array<double, 4> weights{0.45, 0.55 / 3, 0.55 / 3, 0.55 / 3};
  double beta_vol = 0.50;
  double gamma_vol = 0.94;
  double alpha_spread = 1e-3;
  std::size_t vol_lookback = 252;

  void validate() const;
};

/// Observables of one atomic LOB group.
struct FinanceWindow {
  double volume = 0.0;
  double spread = 0.0;
  double mid_price = 0.0;
  double realized_vol = 0.0;
};

/// Rolling statistics the finance components are measured against.
struct FinanceContext {
  std::optional<double> median_volume;
  std::optional<double> sigma_log_volume;
  std::optional<double> expected_vol;
  std::optional<double> info_quality;
};

struct FinanceComponents {
  double liquidity = 0.0;
  double signal = 0.0;
  double stability = 0.0;
  double information = 0.0;
  /// realized / expected volatility; stability is exp(-beta_vol * ratio).
  double vol_ratio = 0.0;
};

double clamp_unit(double x);

/// 1 - 10^(-phred/10). Throws for phred outside [0, 93].
double phred_to_quality(int phred);

double position_adjust(double q, std::size_t i, std::size_t length, const GenomicQualityParams& p);

/// Normalized distance from the read center, the factor multiplying beta_pos.
double position_decay_distance(std::size_t i, std::size_t length, double eps_len);

std::vector<double> position_adjust_all(std::span<const double> q, const GenomicQualityParams& p);

double geometric_token_quality(std::span<const double> adjusted, double eps_q = 1e-8);
double arithmetic_token_quality(std::span<const double> qualities);

FinanceComponents finance_components(const FinanceWindow& w, const FinanceContext& ctx,
                                     const FinanceQualityParams& p);
double finance_element_quality(const FinanceWindow& w, const FinanceContext& ctx,
                               const FinanceQualityParams& p);

/// Produces the FinanceContext for each successive window of a stream:
/// median volume and log-volume sigma over the last `vol_lookback` windows
/// (including the current one) and a RiskMetrics-style EWMA of realized vol.
class FinanceContextTracker {
 public:
  explicit FinanceContextTracker(FinanceQualityParams p, double info_quality = 0.5);

  /// Context for `w`, then absorbs `w` into the rolling state.
  FinanceContext next(const FinanceWindow& w);

 private:
  FinanceQualityParams params_;
  double info_quality_;
  std::deque<double> volumes_;
  std::optional<double> expected_vol_;
  std::optional<double> last_realized_;
};

}  // namespace qatok
