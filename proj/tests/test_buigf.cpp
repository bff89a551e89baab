#include <stdexcept>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pade/buigf.hpp"

using namespace pade;

namespace {

std::vector<BitPlaneSet> planes_of(const std::vector<std::vector<std::int8_t>>& keys, int bits) {
  std::vector<BitPlaneSet> out;
  for (std::size_t j = 0; j < keys.size(); ++j) out.push_back(decompose(keys[j], bits, j));
  return out;
}

}  // namespace

TEST_CASE("threshold update and decision") {
  PruneConfig cfg{0.5, 4.0, 8, 0.5};
  CHECK(cfg.margin() == doctest::Approx(4.0));
  CHECK(update_threshold(kNoThreshold, 10.0, cfg) == doctest::Approx(6.0));
  CHECK(update_threshold(8.0, 10.0, cfg) == doctest::Approx(8.0));
  CHECK(decide(5, 1, 6.0) == Decision::Keep);  // tie kept
  CHECK(decide(5, 0, 6.0) == Decision::Prune);
}

TEST_CASE("prune config validation") {
  CHECK_THROWS_AS((PruneConfig{1.5, 5.0, 8, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PruneConfig{0.5, 0.0, 8, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PruneConfig{0.5, 5.0, 6, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PruneConfig{0.5, 5.0, 8, 0.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((PruneConfig{0.0, 5.0, 4, 1.0}.validate()));
}

TEST_CASE("scoreboard is bounded") {
  Scoreboard sb(2);
  sb.accumulate(3, 5);
  sb.accumulate(3, -2);
  CHECK(sb.find(3)->partial == 3);
  CHECK(sb.find(3)->rounds_done == 2);
  sb.accumulate(4, 1);
  CHECK(sb.full());
  CHECK_THROWS_AS(sb.accumulate(9, 1), std::length_error);
  sb.evict(3);
  CHECK(sb.find(3) == nullptr);
  CHECK(sb.size() == 1);
}

TEST_CASE("threshold history is non-decreasing and filter is deterministic") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = oracle::random_vec(32, 8, rng);
    std::vector<std::vector<std::int8_t>> keys;
    for (int j = 0; j < 40; ++j) keys.push_back(oracle::random_vec(32, 8, rng));
    const auto kp = planes_of(keys, 8);
    const PruneConfig cfg{0.3, 5.0, 8, 0.01};
    const auto t = filter_row(q, kp, cfg);
    for (std::size_t i = 1; i < t.threshold_history.size(); ++i) {
      CHECK(t.threshold_history[i] >= t.threshold_history[i - 1]);
    }
    CHECK(t == filter_row(q, kp, cfg));
  }
}

TEST_CASE("retained keys carry exact scores; pruned keys are provably below the row max by the margin") {
  std::mt19937_64 rng(8);
  for (int bits : {4, 8}) {
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t d = 16;
      const auto q = oracle::random_vec(d, bits, rng);
      std::vector<std::vector<std::int8_t>> keys;
      for (int j = 0; j < 64; ++j) keys.push_back(oracle::random_vec(d, bits, rng));
      const auto kp = planes_of(keys, bits);
      const PruneConfig cfg{0.1 * (1 + trial % 10), 5.0, bits, 0.05};
      const auto t = filter_row(q, kp, cfg);
      std::int64_t mx = std::numeric_limits<std::int64_t>::min();
      for (const auto& k : keys) mx = std::max(mx, oracle::dot(q, k));
      for (std::size_t j = 0; j < keys.size(); ++j) {
        const auto exact = oracle::dot(q, keys[j]);
        const auto& o = t.keys[j];
        if (o.retained) {
          CHECK(o.score == exact);
          CHECK(o.planes_fetched == bits);
        } else {
          CHECK(static_cast<double>(mx - exact) > cfg.margin());
          CHECK(o.planes_fetched == o.pruned_round + 1);
          CHECK(o.score == oracle::partial(q, keys[j], o.pruned_round, bits));
        }
      }
    }
  }
}

TEST_CASE("alpha zero keeps the row maximum; alpha monotonicity") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const auto q = oracle::random_vec(24, 8, rng);
    std::vector<std::vector<std::int8_t>> keys;
    for (int j = 0; j < 50; ++j) keys.push_back(oracle::random_vec(24, 8, rng));
    const auto kp = planes_of(keys, 8);
    std::size_t best = 0;
    for (std::size_t j = 1; j < keys.size(); ++j) {
      if (oracle::dot(q, keys[j]) > oracle::dot(q, keys[best])) best = j;
    }
    const auto t0 = filter_row(q, kp, PruneConfig{0.0, 5.0, 8, 0.02});
    CHECK(t0.keys[best].retained);
    std::size_t prev = 0;
    for (int a = 0; a <= 10; ++a) {
      const auto t = filter_row(q, kp, PruneConfig{a / 10.0, 5.0, 8, 0.02});
      CHECK(t.retained_keys().size() >= prev);
      prev = t.retained_keys().size();
    }
  }
}

TEST_CASE("ordered filter with a subset order") {
  std::mt19937_64 rng(2);
  const auto q = oracle::random_vec(8, 8, rng);
  std::vector<std::vector<std::int8_t>> keys;
  for (int j = 0; j < 6; ++j) keys.push_back(oracle::random_vec(8, 8, rng));
  const auto kp = planes_of(keys, 8);
  const std::vector<std::size_t> order{4, 1};
  const auto t = filter_row_ordered(q, kp, order, PruneConfig{0.5, 5.0, 8, 1.0});
  CHECK(t.keys[0].planes_fetched == 0);
  CHECK_FALSE(t.keys[0].retained);
  CHECK(t.keys[4].planes_fetched > 0);
  std::vector<std::size_t> identity{0, 1, 2, 3, 4, 5};
  CHECK(filter_row_ordered(q, kp, identity, PruneConfig{0.5, 5.0, 8, 1.0}) ==
        filter_row(q, kp, PruneConfig{0.5, 5.0, 8, 1.0}));
}

TEST_CASE("guarded filter step updates then decides") {
  const std::vector<std::int8_t> q{10, -3};
  GuardedFilter gf(q, PruneConfig{0.0, 1.0, 8, 1.0});
  const auto& t = gf.table();
  // First key: its own lower bound sets T, and S + Imax >= S + Imin, so it is kept.
  CHECK(gf.step(100, 0) == Decision::Keep);
  CHECK(gf.threshold() == doctest::Approx(100 + t[0].min));
  CHECK(gf.history().size() == 1);
}
