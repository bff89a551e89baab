#pragma once

#include <cstddef>
#include <vector>

namespace pade {

/// Which V vectors each score row needs, and how many V vectors a PE row
/// consumes per round.
struct UsagePattern {
  std::vector<std::vector<std::size_t>> rows;  // each sorted ascending, unique
  std::size_t capacity = 2;

  /// Throws std::invalid_argument on zero capacity or unsorted/duplicate sets.
  void validate() const;
  std::size_t rounds_lower_bound() const;  // max over rows of ceil(|set| / capacity)
};

struct FetchRound {
  std::vector<std::vector<std::size_t>> served;  // per row, V indices consumed this round
  std::vector<std::size_t> fetched;              // distinct V indices loaded this round, ascending
};

struct FetchSchedule {
  std::vector<FetchRound> rounds;
  std::size_t total_fetches = 0;
};

/// Every row walks its set left to right, `capacity` per round. A V loaded in
/// a round serves every row consuming it that round; reuse in a later round
/// is a reload.
FetchSchedule schedule_naive(const UsagePattern& pattern);

/// Reuse-aware greedy: each round repeatedly issues the V vector wanted by the
/// most rows that still have capacity this round. Ties prefer a vector whose
/// every remaining consumer can take it now (no split), then the lowest index.
FetchSchedule schedule_rars(const UsagePattern& pattern);

/// Exhaustive minimum-fetch schedule within the naive round budget.
/// Limited to <= 8 distinct V indices and <= 4 rows; larger instances throw
/// std::length_error.
FetchSchedule schedule_optimal_bruteforce(const UsagePattern& pattern);

/// Checks coverage (each (row, V) served exactly once) and per-round capacity;
/// recomputes the fetch count. Returns false on any violation.
bool is_valid_schedule(const UsagePattern& pattern, const FetchSchedule& schedule);

}  // namespace pade
