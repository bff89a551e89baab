#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pade/bitplane.hpp"

namespace pade {

enum class Polarity { UseOnes, UseZeros };

// Per-group choice of which bit value to accumulate. A group uses its zeros
// (complement path) only when they are strictly fewer than its ones.
struct GroupPlan {
  std::size_t group_size = 8;
  std::vector<Polarity> polarity;
  std::vector<std::vector<std::size_t>> effective;  // plane indices, ascending

  std::size_t groups() const { return polarity.size(); }
  std::size_t effective_bits() const;
  bool operator==(const GroupPlan&) const = default;
};

/// Plans one bit plane given as 0/1 bits. A tail shorter than the group size
/// is treated as zero-padded.
GroupPlan plan_plane(std::span<const std::uint8_t> plane_bits, std::size_t group_size = 8);

/// Plans plane `round` of a packed key.
GroupPlan plan_plane(const BitPlaneSet& key, int round, std::size_t group_size = 8);

/// Per-group sums of query entries, reused by every complement evaluation.
class QSumTable {
 public:
  QSumTable(std::span<const std::int8_t> q_row, std::size_t group_size);
  std::int64_t operator[](std::size_t group) const { return sums_[group]; }
  std::size_t groups() const { return sums_.size(); }
  std::size_t group_size() const { return group_size_; }

 private:
  std::size_t group_size_;
  std::vector<std::int64_t> sums_;
};

/// One group's contribution: UseOnes sums q over 1-bits, UseZeros returns
/// q_sum minus q over 0-bits. Both equal sum(q_j * bit_j).
std::int64_t group_dot(std::span<const std::int8_t> q_group, std::span<const std::uint8_t> bit_group, Polarity polarity,
                       std::int64_t q_sum);

/// Whole-plane dot through the plan (complement path per UseZeros group).
std::int64_t plane_dot_bs(std::span<const std::int8_t> q_row, const GroupPlan& plan, const QSumTable& qsum);

enum class CostMode { NaiveSerial, BSSerial, GSAT };

/// Cycles to process one plane. NaiveSerial pays one cycle per 1-bit, BSSerial
/// one per effective bit, GSAT one cycle per plane in steady state.
std::size_t plane_cycle_cost(const GroupPlan& plan, std::size_t raw_ones, CostMode mode);

/// Pipeline fill charged once per lane by the temporally reused priority encoder.
constexpr std::size_t gsat_fill_cycles(std::size_t group_size) { return (group_size + 1) / 2 + 1; }

}  // namespace pade
