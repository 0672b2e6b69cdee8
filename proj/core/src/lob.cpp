#include "qatok/lob.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>
#include <string>

namespace qatok {

void BinConfig::validate() const {
  if (price_bins == 0 || spread_bins == 0 || imbalance_bins == 0 || time_bins == 0)
    throw ConfigError("LOB bin counts must be positive");
  if (!(price_range > 0.0) || !(spread_range > 0.0)) throw ConfigError("LOB bin ranges must be positive");
  if (!(time_min > 0.0) || !(time_max > time_min)) throw ConfigError("LOB time bins need 0 < time_min < time_max");
}

std::size_t BinConfig::alphabet_size() const {
  validate();
  return price_bins * spread_bins * imbalance_bins * kLobEventTypes * time_bins;
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::size_t uniform_bin(double x, double lo, double hi, std::size_t bins) {
  const double pos = (x - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(pos > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(pos), bins - 1);
}

}  // namespace

std::vector<LobEvent> read_lob_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("LOB CSV: missing header");
  if (trim(line) != "delta_mid,delta_spread,vol_imbalance,event_type,delta_t")
    throw ParseError("LOB CSV: unexpected header '" + trim(line) + "'");

  std::vector<LobEvent> events;
  long record = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    const std::string where = "LOB CSV row " + std::to_string(record);
    if (fields.size() != 5) throw ParseError(where + ": expected 5 fields", record);

    LobEvent e;
    try {
      e.delta_mid = parse_double(fields[0]);
      e.delta_spread = parse_double(fields[1]);
      e.vol_imbalance = parse_double(fields[2]);
      e.delta_t = parse_double(fields[4]);
    } catch (const ParseError& err) {
      throw ParseError(where + ": " + err.what(), record);
    }
    if (fields[3] == "T") e.type = LobEventType::trade;
    else if (fields[3] == "C") e.type = LobEventType::cancel;
    else if (fields[3] == "L") e.type = LobEventType::limit_order;
    else throw ParseError(where + ": event_type must be T, C or L", record);
    if (!(e.delta_t > 0.0)) throw ParseError(where + ": delta_t must be positive", record);
    if (!std::isfinite(e.delta_mid) || !std::isfinite(e.delta_spread) || !std::isfinite(e.vol_imbalance))
      throw ParseError(where + ": non-finite value", record);
    events.push_back(e);
    ++record;
  }
  return events;
}

std::vector<LobEvent> aggregate_groups(std::span<const LobEvent> events) {
  if (events.empty()) throw std::invalid_argument("LOB: empty event list");
  if (events.size() < kLobGroupSize)
    throw std::invalid_argument("LOB: need at least " + std::to_string(kLobGroupSize) + " events");

  std::vector<LobEvent> groups;
  groups.reserve(events.size() / kLobGroupSize);
  for (std::size_t g = 0; g + kLobGroupSize <= events.size(); g += kLobGroupSize) {
    LobEvent agg{};
    agg.delta_t = 0.0;
    std::array<int, kLobEventTypes> type_count{};
    for (std::size_t k = g; k < g + kLobGroupSize; ++k) {
      const auto& e = events[k];
      if (!(e.delta_t > 0.0)) throw std::invalid_argument("LOB: delta_t must be positive");
      agg.delta_mid += e.delta_mid;
      agg.delta_spread += e.delta_spread;
      agg.vol_imbalance += e.vol_imbalance;
      agg.delta_t += e.delta_t;
      ++type_count[static_cast<std::size_t>(e.type)];
    }
    agg.vol_imbalance /= static_cast<double>(kLobGroupSize);
    const auto mode = std::max_element(type_count.begin(), type_count.end()) - type_count.begin();
    agg.type = static_cast<LobEventType>(mode);
    groups.push_back(agg);
  }
  return groups;
}

SymbolId lob_symbol(const LobEvent& group, const BinConfig& bins) {
  bins.validate();
  const std::size_t p = uniform_bin(group.delta_mid, -bins.price_range, bins.price_range, bins.price_bins);
  const std::size_t s = uniform_bin(group.delta_spread, -bins.spread_range, bins.spread_range, bins.spread_bins);
  const std::size_t i = uniform_bin(group.vol_imbalance, -1.0, 1.0, bins.imbalance_bins);
  const std::size_t e = static_cast<std::size_t>(group.type);
  const std::size_t t = uniform_bin(std::log(group.delta_t), std::log(bins.time_min),
                                    std::log(bins.time_max), bins.time_bins);
  const std::size_t id =
      (((p * bins.spread_bins + s) * bins.imbalance_bins + i) * kLobEventTypes + e) * bins.time_bins + t;
  return static_cast<SymbolId>(id);
}

std::vector<FinanceWindow> lob_group_features(std::span<const LobEvent> events,
                                              const LobSeriesOptions& opts) {
  const auto groups = aggregate_groups(events);
  std::vector<FinanceWindow> out;
  out.reserve(groups.size());
  double mid = opts.initial_mid;
  double spread = opts.initial_spread;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double sq = 0.0;
    for (std::size_t k = g * kLobGroupSize; k < (g + 1) * kLobGroupSize; ++k) {
      sq += events[k].delta_mid * events[k].delta_mid;
    }
    mid += groups[g].delta_mid;
    spread = std::max(0.0, spread + groups[g].delta_spread);
    FinanceWindow w;
    w.volume = static_cast<double>(kLobGroupSize) / groups[g].delta_t;
    w.mid_price = mid;
    w.spread = spread;
    w.realized_vol = std::sqrt(sq / static_cast<double>(kLobGroupSize));
    out.push_back(w);
  }
  return out;
}

AtomicSequence discretize_lob(std::span<const LobEvent> events, const BinConfig& bins,
                              const LobSeriesOptions& opts) {
  bins.validate();
  const auto groups = aggregate_groups(events);
  const auto windows = lob_group_features(events, opts);
  FinanceContextTracker tracker(opts.quality, opts.info_quality);

  AtomicSequence seq;
  seq.elements.reserve(groups.size());
  seq.qualities.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    seq.elements.push_back(lob_symbol(groups[g], bins));
    const auto ctx = tracker.next(windows[g]);
    seq.qualities.push_back(finance_element_quality(windows[g], ctx, opts.quality));
  }
  return seq;
}

std::vector<FinanceComponents> lob_components(std::span<const LobEvent> events, const LobSeriesOptions& opts) {
  const auto windows = lob_group_features(events, opts);
  FinanceContextTracker tracker(opts.quality, opts.info_quality);
  std::vector<FinanceComponents> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(finance_components(w, tracker.next(w), opts.quality));
  return out;
}

std::vector<int> future_return_labels(std::span<const LobEvent> events) {
  const auto groups = aggregate_groups(events);
  const std::size_t n = groups.size();
  std::vector<double> ret(n, 0.0);
  for (std::size_t g = 0; g + 1 < n; ++g) ret[g] = groups[g + 1].delta_mid;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ret[a] < ret[b]; });
  std::vector<int> labels(n);
  for (std::size_t rank = 0; rank < n; ++rank)
    labels[order[rank]] = static_cast<int>(rank * 3 / n);
  return labels;
}

}  // namespace qatok
