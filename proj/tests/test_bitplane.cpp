#include <stdexcept>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pade/bitplane.hpp"

using namespace pade;

TEST_CASE("quantize uses max-abs scale and symmetric range") {
  RealMatrix m(2, 3, std::vector<double>{0.5, -1.0, 0.25, 2.0, -0.125, 0.0});
  const auto q = quantize(m, 8);
  CHECK(q.scale == doctest::Approx(2.0 / 127.0));
  CHECK(q.values(1, 0) == 127);
  CHECK(q.values(0, 1) == -64);  // -63.5 rounds away from zero
  CHECK(q.values(1, 2) == 0);
  const auto q4 = quantize(m, 4);
  CHECK(q4.values(1, 0) == 7);
  for (auto v : q4.values.data()) CHECK(std::abs(v) <= 7);
}

TEST_CASE("quantize edge cases") {
  CHECK(quantize(RealMatrix(2, 2, 0.0)).scale == 1.0);
  CHECK_THROWS_AS(quantize(RealMatrix(1, 1, std::nan("")), 8), std::invalid_argument);
  CHECK_THROWS_AS(quantize(RealMatrix(1, 1, std::numeric_limits<double>::infinity()), 8), std::invalid_argument);
  CHECK_THROWS_AS(quantize(RealMatrix(1, 1, 1.0), 5), std::invalid_argument);
  const auto c = quantize_with_scale(RealMatrix(1, 2, std::vector<double>{300.0, -300.0}), 1.0, 8);
  CHECK(c.values(0, 0) == 127);
  CHECK(c.values(0, 1) == -128);
}

TEST_CASE("dequantize error is at most half a step") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  RealMatrix m(16, 16);
  for (auto& x : m.data()) x = n(rng);
  const auto q = quantize(m);
  const auto back = dequantize(q);
  for (std::size_t i = 0; i < m.data().size(); ++i) CHECK(std::abs(back.data()[i] - m.data()[i]) <= q.scale / 2 + 1e-12);
}

TEST_CASE("plane weights") {
  CHECK(plane_weight(0, 8) == -128);
  CHECK(plane_weight(1, 8) == 64);
  CHECK(plane_weight(7, 8) == 1);
  CHECK(plane_weight(0, 4) == -8);
  CHECK(plane_weight(3, 4) == 1);
}

TEST_CASE("decompose matches two's complement bits for every value") {
  for (int bits : {4, 8}) {
    const int lo = -(1 << (bits - 1)), hi = (1 << (bits - 1)) - 1;
    std::vector<std::int8_t> row;
    for (int v = lo; v <= hi; ++v) row.push_back(static_cast<std::int8_t>(v));
    const auto planes = decompose(row, bits);
    for (std::size_t j = 0; j < row.size(); ++j) {
      for (int r = 0; r < bits; ++r) CHECK(planes.bit(r, j) == (oracle::bit(row[j], r, bits) == 1));
    }
    const auto back = recompose(planes);
    for (std::size_t j = 0; j < row.size(); ++j) CHECK(back[j] == row[j]);
  }
}

TEST_CASE("decompose rejects out-of-range values") {
  std::vector<std::int8_t> row{8};
  CHECK_THROWS_AS(decompose(row, 4), std::invalid_argument);
}

TEST_CASE("popcount and plane dot agree with masked sums") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng() % 130;
    const auto q = oracle::random_vec(d, 8, rng);
    const auto k = oracle::random_vec(d, 8, rng);
    const auto planes = decompose(k, 8, 5);
    CHECK(planes.key_index() == 5);
    for (int r = 0; r < 8; ++r) {
      std::vector<std::uint8_t> mask(d);
      std::size_t ones = 0;
      for (std::size_t j = 0; j < d; ++j) ones += mask[j] = static_cast<std::uint8_t>(oracle::bit(k[j], r, 8));
      CHECK(planes.popcount(r) == ones);
      CHECK(plane_dot(q, planes, r) == oracle::masked_sum(q, mask));
      CHECK(partial_score(q, planes, r) == oracle::partial(q, k, r, 8));
    }
    CHECK(partial_score(q, planes, 7) == oracle::dot(q, k));
    CHECK(exact_dot(q, k) == oracle::dot(q, k));
  }
}

TEST_CASE("uncertainty table equals the tight remainder bounds") {
  std::mt19937_64 rng(5);
  for (int bits : {4, 8}) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto q = oracle::random_vec(1 + rng() % 70, bits, rng);
      const auto t = build_uncertainty_table(q, bits);
      REQUIRE(t.rounds().size() == static_cast<std::size_t>(bits));
      for (int r = 0; r < bits; ++r) {
        const auto b = oracle::remaining_bounds(q, r, bits);
        CHECK(t[r].min == b.lo);
        CHECK(t[r].max == b.hi);
      }
      CHECK(t[bits - 1] == Interval{0, 0});
    }
  }
}

TEST_CASE("bounds are attained by some key (p=4, d=2, exhaustive)") {
  for (int q0 = -8; q0 < 8; ++q0) {
    for (int q1 = -8; q1 < 8; ++q1) {
      const std::vector<std::int8_t> q{static_cast<std::int8_t>(q0), static_cast<std::int8_t>(q1)};
      const auto t = build_uncertainty_table(q, 4);
      for (int r = 0; r < 4; ++r) {
        std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = std::numeric_limits<std::int64_t>::min();
        for (int k0 = -8; k0 < 8; ++k0) {
          for (int k1 = -8; k1 < 8; ++k1) {
            const std::vector<std::int8_t> k{static_cast<std::int8_t>(k0), static_cast<std::int8_t>(k1)};
            if (oracle::truncate_to_round(k0, r, 4) != 0 || oracle::truncate_to_round(k1, r, 4) != 0) continue;
            const auto s = oracle::dot(q, k);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
          }
        }
        CHECK(t[r].min == lo);
        CHECK(t[r].max == hi);
      }
    }
  }
}

TEST_CASE("group-scaled bounds contain the exact group-scaled dot") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> sc(0.01, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t g = 8, groups = 1 + rng() % 6;
    const auto q = oracle::random_vec(g * groups, 8, rng);
    const auto k = oracle::random_vec(g * groups, 8, rng);
    std::vector<double> qs(groups), ks(groups);
    for (auto& x : qs) x = sc(rng);
    for (auto& x : ks) x = sc(rng);
    const MxScales s{g, qs, ks, sc(rng)};
    double exact = 0;
    for (std::size_t b = 0; b < groups; ++b) {
      std::int64_t dot = 0;
      for (std::size_t j = b * g; j < (b + 1) * g; ++j) dot += std::int64_t{q[j]} * k[j];
      exact += static_cast<double>(dot) * qs[b] * ks[b] / s.output_scale;
    }
    CHECK(mx_exact_dot(q, k, s) == doctest::Approx(exact).epsilon(1e-12));
    const auto planes = decompose(k, 8);
    const auto bui = mx_group_bui(q, s, 8);
    for (int r = 0; r < 8; ++r) {
      const double p = mx_partial_score(q, planes, s, r);
      const double tol = 1e-9 * (1 + std::abs(exact));
      CHECK(p + bui[r].min <= exact + tol);
      CHECK(p + bui[r].max >= exact - tol);
    }
  }
}

TEST_CASE("group-scaled inputs are validated") {
  const std::vector<std::int8_t> q(12, 1);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(mx_group_bui(q, MxScales{8, one, one, 1.0}, 8), std::invalid_argument);
  const std::vector<std::int8_t> q8(8, 1);
  const std::vector<double> neg{-1.0};
  CHECK_THROWS_AS(mx_group_bui(q8, MxScales{8, neg, one, 1.0}, 8), std::invalid_argument);
}
