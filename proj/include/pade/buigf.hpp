#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pade/bitplane.hpp"

namespace pade {

/// Guarded-filter parameters. `radius` is in logit units; `score_scale`
/// converts integer scores into logits (scale_Q * scale_K / sqrt(d)).
struct PruneConfig {
  double alpha = 0.5;
  double radius = 5.0;
  int bits = 8;
  double score_scale = 1.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Pruning margin alpha * radius expressed in integer score units.
  double margin() const { return alpha * radius / score_scale; }
};

enum class Decision { Keep, Prune };

inline constexpr double kNoThreshold = -std::numeric_limits<double>::infinity();

/// T' = max(T, lower_bound - alpha * radius / score_scale).
double update_threshold(double current, double lower_bound, const PruneConfig& cfg);

/// Keep iff S^r + I^{r,max} >= T. Equality is kept so the row maximum survives at alpha = 0.
Decision decide(std::int64_t partial, std::int64_t upper_interval, double threshold);

/// Bounded per-lane store of partial scores keyed by key index.
class Scoreboard {
 public:
  struct Entry {
    std::size_t key = 0;
    std::int64_t partial = 0;
    int rounds_done = 0;
  };

  explicit Scoreboard(std::size_t capacity = 32) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() >= capacity_; }
  bool empty() const { return entries_.empty(); }

  const Entry* find(std::size_t key) const;

  /// Adds `delta` to the key's partial score, inserting it on first use (the MSB round).
  /// Throws std::length_error when a new key does not fit.
  const Entry& accumulate(std::size_t key, std::int64_t delta);

  void evict(std::size_t key);

  std::span<const Entry> entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
};

/// Streaming BUI-GF state for one query row: the uncertainty table, the running
/// threshold and its history. Safe for any key visiting order.
class GuardedFilter {
 public:
  GuardedFilter(std::span<const std::int8_t> q_row, const PruneConfig& cfg);

  /// Folds the lower bound of a freshly computed round-`round` partial score
  /// into the threshold, then decides the key.
  Decision step(std::int64_t partial, int round);

  double threshold() const { return threshold_; }
  const UncertaintyTable& table() const { return table_; }
  const std::vector<double>& history() const { return history_; }
  const PruneConfig& config() const { return cfg_; }

 private:
  PruneConfig cfg_;
  UncertaintyTable table_;
  double threshold_ = kNoThreshold;
  std::vector<double> history_;
};

struct KeyOutcome {
  bool retained = false;
  int pruned_round = -1;  // -1 when retained
  int planes_fetched = 0;
  std::int64_t score = 0;  // exact when retained, last partial otherwise
  bool operator==(const KeyOutcome&) const = default;
};

struct PruneTrace {
  std::vector<KeyOutcome> keys;
  double final_threshold = kNoThreshold;
  std::vector<double> threshold_history;

  std::vector<std::size_t> retained_keys() const;
  std::size_t planes_fetched() const;
  bool operator==(const PruneTrace&) const = default;
};

/// Canonical functional BUI-GF for one query row: keys visited in index order,
/// each advanced MSB to LSB with a decision after every round.
PruneTrace filter_row(std::span<const std::int8_t> q_row, std::span<const BitPlaneSet> keys, const PruneConfig& cfg);

/// Same procedure over an explicit visiting order. Keys absent from `order`
/// are reported as never fetched (planes_fetched = 0, not retained).
PruneTrace filter_row_ordered(std::span<const std::int8_t> q_row, std::span<const BitPlaneSet> keys,
                              std::span<const std::size_t> order, const PruneConfig& cfg);

}  // namespace pade
