#include "pade/rars.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace pade {

void UsagePattern::validate() const {
  if (capacity == 0) throw std::invalid_argument("UsagePattern: capacity must be positive");
  for (const auto& r : rows) {
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (r[i] <= r[i - 1]) throw std::invalid_argument("UsagePattern: row sets must be sorted and unique");
    }
  }
}

std::size_t UsagePattern::rounds_lower_bound() const {
  std::size_t r = 0;
  for (const auto& row : rows) r = std::max(r, (row.size() + capacity - 1) / capacity);
  return r;
}

namespace {

void finish_round(FetchRound& round, FetchSchedule& schedule) {
  std::set<std::size_t> fetched;
  for (const auto& s : round.served) fetched.insert(s.begin(), s.end());
  round.fetched.assign(fetched.begin(), fetched.end());
  schedule.total_fetches += round.fetched.size();
  schedule.rounds.push_back(std::move(round));
}

}  // namespace

FetchSchedule schedule_naive(const UsagePattern& pattern) {
  pattern.validate();
  FetchSchedule schedule;
  const std::size_t n_rounds = pattern.rounds_lower_bound();
  for (std::size_t r = 0; r < n_rounds; ++r) {
    FetchRound round;
    round.served.resize(pattern.rows.size());
    for (std::size_t i = 0; i < pattern.rows.size(); ++i) {
      const auto& set = pattern.rows[i];
      const std::size_t begin = std::min(set.size(), r * pattern.capacity);
      const std::size_t end = std::min(set.size(), begin + pattern.capacity);
      round.served[i].assign(set.begin() + static_cast<std::ptrdiff_t>(begin),
                             set.begin() + static_cast<std::ptrdiff_t>(end));
    }
    finish_round(round, schedule);
  }
  return schedule;
}

FetchSchedule schedule_rars(const UsagePattern& pattern) {
  pattern.validate();
  const std::size_t n = pattern.rows.size();
  // V index -> rows still needing it; the row bitmask is the sharing signature.
  std::map<std::size_t, std::set<std::size_t>> consumers;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v : pattern.rows[i]) consumers[v].insert(i);
  }

  FetchSchedule schedule;
  while (!consumers.empty()) {
    FetchRound round;
    round.served.resize(n);
    std::vector<std::size_t> room(n, pattern.capacity);
    while (true) {
      std::size_t best_v = 0;
      std::size_t best_count = 0;
      bool best_whole = false;
      bool found = false;
      for (const auto& [v, rows] : consumers) {
        std::size_t count = 0;
        for (std::size_t i : rows) count += room[i] > 0 ? 1 : 0;
        if (count == 0) continue;
        const bool whole = count == rows.size();
        if (!found || count > best_count || (count == best_count && whole && !best_whole)) {
          best_v = v;
          best_count = count;
          best_whole = whole;
          found = true;
        }
      }
      if (!found) break;
      auto& rows = consumers[best_v];
      for (auto it = rows.begin(); it != rows.end();) {
        if (room[*it] > 0) {
          --room[*it];
          round.served[*it].push_back(best_v);
          it = rows.erase(it);
        } else {
          ++it;
        }
      }
      if (rows.empty()) consumers.erase(best_v);
    }
    for (auto& s : round.served) std::sort(s.begin(), s.end());
    finish_round(round, schedule);
  }
  return schedule;
}

namespace {

constexpr std::size_t kMaxBruteV = 8;
constexpr std::size_t kMaxBruteRows = 4;

struct BruteSearch {
  const UsagePattern& pattern;
  std::size_t n_rounds;
  std::vector<std::size_t> vs;                     // distinct V, ascending
  std::vector<std::vector<std::size_t>> needers;   // per V: rows needing it
  std::map<std::pair<std::size_t, std::string>, std::size_t> memo;

  // usage[row * n_rounds + round] = slots consumed
  std::size_t solve(std::size_t vi, std::string& usage) {
    if (vi == vs.size()) return 0;
    auto key = std::make_pair(vi, usage);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> choice(needers[vi].size(), 0);
    enumerate(vi, 0, choice, usage, best);
    memo.emplace(std::move(key), best);
    return best;
  }

  void enumerate(std::size_t vi, std::size_t k, std::vector<std::size_t>& choice, std::string& usage,
                 std::size_t& best) {
    const auto& rows = needers[vi];
    if (k == rows.size()) {
      std::size_t used = 0;
      for (std::size_t r = 0; r < n_rounds; ++r) {
        if (std::find(choice.begin(), choice.end(), r) != choice.end()) ++used;
      }
      if (used >= best) return;
      const std::size_t rest = solve(vi + 1, usage);
      if (rest != std::numeric_limits<std::size_t>::max()) best = std::min(best, used + rest);
      return;
    }
    for (std::size_t r = 0; r < n_rounds; ++r) {
      char& slot = usage[rows[k] * n_rounds + r];
      if (static_cast<std::size_t>(slot) >= pattern.capacity) continue;
      ++slot;
      choice[k] = r;
      enumerate(vi, k + 1, choice, usage, best);
      --slot;
    }
  }

  // Replays the memoised optimum to recover one optimal assignment.
  bool rebuild(std::size_t vi, std::string& usage, std::size_t target, std::vector<std::size_t>& choice, std::size_t k,
               std::vector<std::vector<std::size_t>>& assignment) {
    const auto& rows = needers[vi];
    if (k == rows.size()) {
      std::size_t used = 0;
      for (std::size_t r = 0; r < n_rounds; ++r) {
        if (std::find(choice.begin(), choice.end(), r) != choice.end()) ++used;
      }
      if (used > target) return false;
      if (vi + 1 == vs.size()) {
        if (used != target) return false;
      } else if (used + solve(vi + 1, usage) != target) {
        return false;
      }
      assignment[vi] = choice;
      if (vi + 1 == vs.size()) return true;
      std::vector<std::size_t> next(needers[vi + 1].size(), 0);
      return rebuild(vi + 1, usage, target - used, next, 0, assignment);
    }
    for (std::size_t r = 0; r < n_rounds; ++r) {
      char& slot = usage[rows[k] * n_rounds + r];
      if (static_cast<std::size_t>(slot) >= pattern.capacity) continue;
      ++slot;
      choice[k] = r;
      if (rebuild(vi, usage, target, choice, k + 1, assignment)) return true;
      --slot;
    }
    return false;
  }
};

}  // namespace

FetchSchedule schedule_optimal_bruteforce(const UsagePattern& pattern) {
  pattern.validate();
  std::set<std::size_t> distinct;
  for (const auto& r : pattern.rows) distinct.insert(r.begin(), r.end());
  if (distinct.size() > kMaxBruteV || pattern.rows.size() > kMaxBruteRows) {
    throw std::length_error("schedule_optimal_bruteforce: instance too large (max " + std::to_string(kMaxBruteV) +
                            " V indices, " + std::to_string(kMaxBruteRows) + " rows)");
  }
  BruteSearch search{pattern, pattern.rounds_lower_bound(), {distinct.begin(), distinct.end()}, {}, {}};
  search.needers.resize(search.vs.size());
  for (std::size_t vi = 0; vi < search.vs.size(); ++vi) {
    for (std::size_t i = 0; i < pattern.rows.size(); ++i) {
      const auto& set = pattern.rows[i];
      if (std::binary_search(set.begin(), set.end(), search.vs[vi])) search.needers[vi].push_back(i);
    }
  }

  FetchSchedule schedule;
  if (search.vs.empty()) return schedule;

  std::string usage(pattern.rows.size() * search.n_rounds, 0);
  const std::size_t best = search.solve(0, usage);
  std::vector<std::vector<std::size_t>> assignment(search.vs.size());
  std::string replay(usage.size(), 0);
  std::vector<std::size_t> first(search.needers[0].size(), 0);
  search.rebuild(0, replay, best, first, 0, assignment);

  for (std::size_t r = 0; r < search.n_rounds; ++r) {
    FetchRound round;
    round.served.resize(pattern.rows.size());
    for (std::size_t vi = 0; vi < search.vs.size(); ++vi) {
      for (std::size_t k = 0; k < search.needers[vi].size(); ++k) {
        if (assignment[vi][k] == r) round.served[search.needers[vi][k]].push_back(search.vs[vi]);
      }
    }
    bool any = false;
    for (const auto& s : round.served) any = any || !s.empty();
    if (any) finish_round(round, schedule);
  }
  return schedule;
}

bool is_valid_schedule(const UsagePattern& pattern, const FetchSchedule& schedule) {
  std::vector<std::multiset<std::size_t>> served(pattern.rows.size());
  std::size_t fetches = 0;
  for (const auto& round : schedule.rounds) {
    if (round.served.size() != pattern.rows.size()) return false;
    std::set<std::size_t> loaded;
    for (std::size_t i = 0; i < round.served.size(); ++i) {
      if (round.served[i].size() > pattern.capacity) return false;
      for (std::size_t v : round.served[i]) {
        served[i].insert(v);
        loaded.insert(v);
      }
    }
    if (std::vector<std::size_t>(loaded.begin(), loaded.end()) != round.fetched) return false;
    fetches += loaded.size();
  }
  for (std::size_t i = 0; i < pattern.rows.size(); ++i) {
    if (std::multiset<std::size_t>(pattern.rows[i].begin(), pattern.rows[i].end()) != served[i]) return false;
  }
  return fetches == schedule.total_fetches;
}

}  // namespace pade
