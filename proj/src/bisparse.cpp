#include "pade/bisparse.hpp"

#include <stdexcept>

namespace pade {

std::size_t GroupPlan::effective_bits() const {
  std::size_t n = 0;
  for (const auto& e : effective) n += e.size();
  return n;
}

GroupPlan plan_plane(std::span<const std::uint8_t> plane_bits, std::size_t group_size) {
  if (group_size == 0) throw std::invalid_argument("plan_plane: group size must be positive");
  GroupPlan plan;
  plan.group_size = group_size;
  const std::size_t groups = (plane_bits.size() + group_size - 1) / group_size;
  plan.polarity.reserve(groups);
  plan.effective.reserve(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t begin = g * group_size;
    const std::size_t end = std::min(begin + group_size, plane_bits.size());
    std::size_t ones = 0;
    for (std::size_t j = begin; j < end; ++j) ones += plane_bits[j] ? 1 : 0;
    const std::size_t zeros = group_size - ones;  // padding counts as zeros
    const Polarity pol = ones <= zeros ? Polarity::UseOnes : Polarity::UseZeros;
    const std::uint8_t wanted = pol == Polarity::UseOnes ? 1 : 0;
    std::vector<std::size_t> eff;
    for (std::size_t j = begin; j < end; ++j) {
      if ((plane_bits[j] ? 1 : 0) == wanted) eff.push_back(j);
    }
    plan.polarity.push_back(pol);
    plan.effective.push_back(std::move(eff));
  }
  return plan;
}

GroupPlan plan_plane(const BitPlaneSet& key, int round, std::size_t group_size) {
  std::vector<std::uint8_t> bits(key.dim());
  for (std::size_t j = 0; j < key.dim(); ++j) bits[j] = key.bit(round, j) ? 1 : 0;
  return plan_plane(bits, group_size);
}

QSumTable::QSumTable(std::span<const std::int8_t> q_row, std::size_t group_size) : group_size_(group_size) {
  if (group_size == 0) throw std::invalid_argument("QSumTable: group size must be positive");
  sums_.assign((q_row.size() + group_size - 1) / group_size, 0);
  for (std::size_t j = 0; j < q_row.size(); ++j) sums_[j / group_size] += q_row[j];
}

std::int64_t group_dot(std::span<const std::int8_t> q_group, std::span<const std::uint8_t> bit_group, Polarity polarity,
                       std::int64_t q_sum) {
  if (q_group.size() != bit_group.size()) throw std::invalid_argument("group_dot: size mismatch");
  std::int64_t acc = 0;
  if (polarity == Polarity::UseOnes) {
    for (std::size_t j = 0; j < q_group.size(); ++j) {
      if (bit_group[j]) acc += q_group[j];
    }
    return acc;
  }
  for (std::size_t j = 0; j < q_group.size(); ++j) {
    if (!bit_group[j]) acc += q_group[j];
  }
  return q_sum - acc;
}

std::int64_t plane_dot_bs(std::span<const std::int8_t> q_row, const GroupPlan& plan, const QSumTable& qsum) {
  if (plan.group_size != qsum.group_size() || plan.groups() != qsum.groups() ||
      plan.groups() != (q_row.size() + plan.group_size - 1) / plan.group_size) {
    throw std::invalid_argument("plane_dot_bs: inconsistent plan, key and query");
  }
  std::int64_t acc = 0;
  for (std::size_t g = 0; g < plan.groups(); ++g) {
    std::int64_t s = 0;
    for (std::size_t j : plan.effective[g]) s += q_row[j];
    acc += plan.polarity[g] == Polarity::UseOnes ? s : qsum[g] - s;
  }
  return acc;
}

std::size_t plane_cycle_cost(const GroupPlan& plan, std::size_t raw_ones, CostMode mode) {
  switch (mode) {
    case CostMode::NaiveSerial:
      return raw_ones;
    case CostMode::BSSerial:
      return plan.effective_bits();
    case CostMode::GSAT:
      return 1;
  }
  throw std::invalid_argument("plane_cycle_cost: unknown cost mode");
}

}  // namespace pade
