#pragma once

#include "qatok/corpus.hpp"
#include "qatok/quality.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace qatok {

enum class LobEventType : std::uint8_t { trade = 0, cancel = 1, limit_order = 2 };

struct LobEvent {
  double delta_mid = 0.0;      // ticks
  double delta_spread = 0.0;   // ticks
  double vol_imbalance = 0.0;  // signed fraction
  LobEventType type = LobEventType::trade;
  double delta_t = 1.0;        // seconds, > 0
};

/// Events per atomic LOB symbol.
inline constexpr std::size_t kLobGroupSize = 5;
inline constexpr std::size_t kLobEventTypes = 3;

struct BinConfig {
  std::size_t price_bins = 10;
  double price_range = 5.0;  // uniform over [-range, range] ticks
  std::size_t spread_bins = 10;
  double spread_range = 5.0;
  std::size_t imbalance_bins = 5;  // uniform over [-1, 1]
  std::size_t time_bins = 5;       // log-spaced over [time_min, time_max] seconds
  double time_min = 1e-3;
  double time_max = 60.0;

  void validate() const;
  std::size_t alphabet_size() const;
};

/// CSV with header `delta_mid,delta_spread,vol_imbalance,event_type,delta_t`.
std::vector<LobEvent> read_lob_csv(std::istream& in);

/// Collapses consecutive non-overlapping groups of kLobGroupSize events:
/// summed price/spread moves and durations, mean imbalance, modal event type
/// (ties go to the lowest type). The trailing remainder is dropped.
std::vector<LobEvent> aggregate_groups(std::span<const LobEvent> events);

SymbolId lob_symbol(const LobEvent& group, const BinConfig& bins);

struct LobSeriesOptions {
  double initial_mid = 10000.0;  // ticks
  double initial_spread = 1.0;   // ticks
  FinanceQualityParams quality;
  double info_quality = 0.5;
};

/// Market observables per group: event intensity as volume proxy, mid and
/// spread reconstructed from the cumulative deltas, and realized volatility
/// as the RMS of the per-event mid changes.
std::vector<FinanceWindow> lob_group_features(std::span<const LobEvent> events,
                                              const LobSeriesOptions& opts = {});

/// Symbols plus composite finance quality per group.
AtomicSequence discretize_lob(std::span<const LobEvent> events, const BinConfig& bins,
                              const LobSeriesOptions& opts = {});

/// Per-group quality components (before weighting), for learning the
/// composite weights.
std::vector<FinanceComponents> lob_components(std::span<const LobEvent> events, const LobSeriesOptions& opts = {});

/// Tercile label (0 down, 1 flat, 2 up) of the next group's mid move for
/// every group; the last group sees a zero move.
std::vector<int> future_return_labels(std::span<const LobEvent> events);

}  // namespace qatok
