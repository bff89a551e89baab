#include "pade/buigf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pade {

void PruneConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be within [0, 1]");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be positive");
  if (bits != 4 && bits != 8) throw std::invalid_argument("bits must be 4 or 8");
  if (!(score_scale > 0.0) || !std::isfinite(score_scale)) {
    throw std::invalid_argument("score_scale must be positive");
  }
}

double update_threshold(double current, double lower_bound, const PruneConfig& cfg) {
  return std::max(current, lower_bound - cfg.margin());
}

Decision decide(std::int64_t partial, std::int64_t upper_interval, double threshold) {
  return static_cast<double>(partial + upper_interval) >= threshold ? Decision::Keep : Decision::Prune;
}

const Scoreboard::Entry* Scoreboard::find(std::size_t key) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [key](const Entry& e) { return e.key == key; });
  return it == entries_.end() ? nullptr : &*it;
}

const Scoreboard::Entry& Scoreboard::accumulate(std::size_t key, std::int64_t delta) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [key](const Entry& e) { return e.key == key; });
  if (it == entries_.end()) {
    if (full()) throw std::length_error("Scoreboard: capacity exceeded");
    entries_.push_back(Entry{key, delta, 1});
    return entries_.back();
  }
  it->partial += delta;
  ++it->rounds_done;
  return *it;
}

void Scoreboard::evict(std::size_t key) {
  std::erase_if(entries_, [key](const Entry& e) { return e.key == key; });
}

GuardedFilter::GuardedFilter(std::span<const std::int8_t> q_row, const PruneConfig& cfg)
    : cfg_(cfg), table_(build_uncertainty_table(q_row, cfg.bits)) {
  cfg_.validate();
}

Decision GuardedFilter::step(std::int64_t partial, int round) {
  const Interval& iv = table_[round];
  threshold_ = update_threshold(threshold_, static_cast<double>(partial + iv.min), cfg_);
  history_.push_back(threshold_);
  return decide(partial, iv.max, threshold_);
}

std::vector<std::size_t> PruneTrace::retained_keys() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < keys.size(); ++j) {
    if (keys[j].retained) out.push_back(j);
  }
  return out;
}

std::size_t PruneTrace::planes_fetched() const {
  std::size_t n = 0;
  for (const auto& k : keys) n += static_cast<std::size_t>(k.planes_fetched);
  return n;
}

PruneTrace filter_row_ordered(std::span<const std::int8_t> q_row, std::span<const BitPlaneSet> keys,
                              std::span<const std::size_t> order, const PruneConfig& cfg) {
  GuardedFilter filter(q_row, cfg);
  Scoreboard board(1);
  PruneTrace trace;
  trace.keys.resize(keys.size());
  for (std::size_t j : order) {
    const BitPlaneSet& key = keys[j];
    if (key.bits() != cfg.bits || key.dim() != q_row.size()) {
      throw std::invalid_argument("filter_row: key planes inconsistent with query/config");
    }
    KeyOutcome& out = trace.keys[j];
    for (int r = 0; r < cfg.bits; ++r) {
      const auto& entry = board.accumulate(j, plane_contribution(q_row, key, r));
      out.planes_fetched = r + 1;
      out.score = entry.partial;
      if (filter.step(entry.partial, r) == Decision::Prune) {
        out.pruned_round = r;
        break;
      }
      if (r == cfg.bits - 1) out.retained = true;
    }
    board.evict(j);
  }
  trace.final_threshold = filter.threshold();
  trace.threshold_history = filter.history();
  return trace;
}

PruneTrace filter_row(std::span<const std::int8_t> q_row, std::span<const BitPlaneSet> keys, const PruneConfig& cfg) {
  std::vector<std::size_t> order(keys.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  return filter_row_ordered(q_row, keys, order, cfg);
}

}  // namespace pade
