#include <stdexcept>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pade/bisparse.hpp"

using namespace pade;

TEST_CASE("group polarity picks zeros only when strictly fewer") {
  const std::vector<std::uint8_t> bits{1, 1, 1, 1, 1, 0, 0, 0,  // 5 ones -> zeros
                                       1, 1, 1, 1, 0, 0, 0, 0,  // tie -> ones
                                       1, 0};                   // tail padded with zeros
  const auto plan = plan_plane(bits, 8);
  REQUIRE(plan.groups() == 3);
  CHECK(plan.polarity[0] == Polarity::UseZeros);
  CHECK(plan.polarity[1] == Polarity::UseOnes);
  CHECK(plan.polarity[2] == Polarity::UseOnes);
  CHECK(plan.effective[0] == std::vector<std::size_t>{5, 6, 7});
  CHECK(plan.effective_bits() == 3 + 4 + 1);
}

TEST_CASE("complement evaluation equals masked sum; effective bits capped at half") {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution density(0.5);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t g = std::size_t{1} << (1 + rng() % 4);  // 2..16
    const std::size_t d = 1 + rng() % 100;
    const auto q = oracle::random_vec(d, 8, rng);
    std::bernoulli_distribution b(static_cast<double>(rng() % 101) / 100.0);
    std::vector<std::uint8_t> bits(d);
    for (auto& x : bits) x = b(rng);
    const auto plan = plan_plane(bits, g);
    QSumTable qs(q, g);
    CHECK(plane_dot_bs(q, plan, qs) == oracle::masked_sum(q, bits));
    for (const auto& e : plan.effective) CHECK(e.size() <= (g + 1) / 2);
  }
}

TEST_CASE("group dot both polarities") {
  const std::vector<std::int8_t> q{3, -4, 5, 7};
  const std::vector<std::uint8_t> m{1, 1, 0, 1};
  const std::int64_t qsum = 11;
  CHECK(group_dot(q, m, Polarity::UseOnes, qsum) == 6);
  CHECK(group_dot(q, m, Polarity::UseZeros, qsum) == 6);
}

TEST_CASE("packed plan matches unpacked plan") {
  std::mt19937_64 rng(1);
  const auto k = oracle::random_vec(64, 8, rng);
  const auto planes = decompose(k, 8);
  for (int r = 0; r < 8; ++r) {
    std::vector<std::uint8_t> bits(64);
    for (std::size_t j = 0; j < 64; ++j) bits[j] = static_cast<std::uint8_t>(oracle::bit(k[j], r, 8));
    CHECK(plan_plane(planes, r, 8) == plan_plane(bits, 8));
  }
}

TEST_CASE("cycle costs") {
  const std::vector<std::uint8_t> bits{1, 1, 1, 1, 1, 1, 0, 0};
  const auto plan = plan_plane(bits, 8);
  CHECK(plane_cycle_cost(plan, 6, CostMode::NaiveSerial) == 6);
  CHECK(plane_cycle_cost(plan, 6, CostMode::BSSerial) == 2);
  CHECK(plane_cycle_cost(plan, 6, CostMode::GSAT) == 1);
  CHECK(gsat_fill_cycles(8) == 5);
}
