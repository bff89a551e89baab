#include "pade/bitplane.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pade {
namespace {

void check_bits(int bits) {
  if (bits != 4 && bits != 8) {
    throw std::invalid_argument("quantize: bits must be 4 or 8, got " + std::to_string(bits));
  }
}

std::int8_t to_grid(double x, double scale, int bits) {
  const double hi = static_cast<double>((1 << (bits - 1)) - 1);
  const double lo = -static_cast<double>(1 << (bits - 1));
  // std::round rounds half away from zero.
  return static_cast<std::int8_t>(std::clamp(std::round(x / scale), lo, hi));
}

void check_range(std::span<const std::int8_t> row, int bits) {
  const int lo = -(1 << (bits - 1));
  const int hi = (1 << (bits - 1)) - 1;
  for (auto v : row) {
    if (v < lo || v > hi) {
      throw std::invalid_argument("decompose: value " + std::to_string(v) + " outside " + std::to_string(bits) +
                                  "-bit range");
    }
  }
}

}  // namespace

QuantizedMatrix quantize(const RealMatrix& input, int bits) {
  check_bits(bits);
  double max_abs = 0.0;
  for (double x : input.data()) {
    if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite entry");
    max_abs = std::max(max_abs, std::abs(x));
  }
  const double scale = max_abs > 0.0 ? max_abs / static_cast<double>((1 << (bits - 1)) - 1) : 1.0;
  return quantize_with_scale(input, scale, bits);
}

QuantizedMatrix quantize_with_scale(const RealMatrix& input, double scale, int bits) {
  check_bits(bits);
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("quantize: scale must be positive");
  QuantizedMatrix out{Matrix<std::int8_t>(input.rows(), input.cols()), scale, bits};
  for (std::size_t i = 0; i < input.rows(); ++i) {
    for (std::size_t j = 0; j < input.cols(); ++j) {
      const double x = input(i, j);
      if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite entry");
      out.values(i, j) = to_grid(x, scale, bits);
    }
  }
  return out;
}

RealMatrix dequantize(const QuantizedMatrix& q) {
  RealMatrix out(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < q.cols(); ++j) out(i, j) = q.values(i, j) * q.scale;
  }
  return out;
}

BitPlaneSet::BitPlaneSet(std::size_t key_index, std::size_t dim, int bits)
    : key_index_(key_index), dim_(dim), bits_(bits), words_((dim + 63) / 64),
      planes_(static_cast<std::size_t>(bits) * words_, 0) {}

std::size_t BitPlaneSet::popcount(int round) const {
  std::size_t n = 0;
  for (auto w : plane(round)) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

BitPlaneSet decompose(std::span<const std::int8_t> row, int bits, std::size_t key_index) {
  check_range(row, bits);
  BitPlaneSet out(key_index, row.size(), bits);
  const unsigned mask = (1u << bits) - 1u;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const unsigned u = static_cast<unsigned>(static_cast<int>(row[j])) & mask;
    for (int r = 0; r < bits; ++r) {
      if ((u >> (bits - 1 - r)) & 1u) out.set_bit(r, j);
    }
  }
  return out;
}

std::vector<BitPlaneSet> decompose_all(const QuantizedMatrix& keys) {
  std::vector<BitPlaneSet> out;
  out.reserve(keys.rows());
  for (std::size_t i = 0; i < keys.rows(); ++i) out.push_back(decompose(keys.row(i), keys.bits, i));
  return out;
}

std::vector<std::int32_t> recompose(const BitPlaneSet& planes) {
  std::vector<std::int32_t> out(planes.dim(), 0);
  for (std::size_t j = 0; j < planes.dim(); ++j) {
    std::int64_t v = 0;
    for (int r = 0; r < planes.bits(); ++r) {
      if (planes.bit(r, j)) v += plane_weight(r, planes.bits());
    }
    out[j] = static_cast<std::int32_t>(v);
  }
  return out;
}

std::int64_t plane_dot(std::span<const std::int8_t> q_row, const BitPlaneSet& key, int round) {
  if (q_row.size() != key.dim()) throw std::invalid_argument("plane_dot: dimension mismatch");
  std::int64_t acc = 0;
  const auto words = key.plane(round);
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    while (bits != 0) {
      const int b = std::countr_zero(bits);
      acc += q_row[w * 64 + static_cast<std::size_t>(b)];
      bits &= bits - 1;
    }
  }
  return acc;
}

std::int64_t partial_score(std::span<const std::int8_t> q_row, const BitPlaneSet& key, int round) {
  if (round < 0 || round >= key.bits()) throw std::out_of_range("partial_score: round out of range");
  std::int64_t s = 0;
  for (int r = 0; r <= round; ++r) s += plane_contribution(q_row, key, r);
  return s;
}

std::int64_t exact_dot(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("exact_dot: dimension mismatch");
  std::int64_t s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<std::int64_t>(a[j]) * b[j];
  return s;
}

UncertaintyTable build_uncertainty_table(std::span<const std::int8_t> q_row, int bits) {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
  for (auto q : q_row) (q > 0 ? pos : neg) += q;
  std::vector<Interval> rounds(static_cast<std::size_t>(bits));
  for (int r = 0; r < bits; ++r) {
    // Unseen planes r+1..p-1 are all non-negative weights summing to 2^(p-1-r) - 1.
    const std::int64_t unseen = (std::int64_t{1} << (bits - 1 - r)) - 1;
    rounds[r] = Interval{unseen * neg, unseen * pos};
  }
  return UncertaintyTable(bits, std::move(rounds));
}

namespace {

std::size_t check_groups(std::size_t dim, const MxScales& s) {
  if (s.group_size == 0 || dim % s.group_size != 0) {
    throw std::invalid_argument("mx_group_bui: dimension must be divisible by the group size");
  }
  const std::size_t groups = dim / s.group_size;
  if (s.query_scales.size() != groups || s.key_scales.size() != groups) {
    throw std::invalid_argument("mx_group_bui: one query and one key scale required per group");
  }
  auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!positive(s.output_scale) || !std::all_of(s.query_scales.begin(), s.query_scales.end(), positive) ||
      !std::all_of(s.key_scales.begin(), s.key_scales.end(), positive)) {
    throw std::invalid_argument("mx_group_bui: scales must be positive");
  }
  return groups;
}

double group_factor(const MxScales& s, std::size_t g) { return s.query_scales[g] * s.key_scales[g] / s.output_scale; }

}  // namespace

std::vector<RealInterval> mx_group_bui(std::span<const std::int8_t> q_row, const MxScales& scales, int bits) {
  const std::size_t groups = check_groups(q_row.size(), scales);
  std::vector<RealInterval> out(static_cast<std::size_t>(bits));
  for (std::size_t g = 0; g < groups; ++g) {
    const auto table = build_uncertainty_table(q_row.subspan(g * scales.group_size, scales.group_size), bits);
    const double f = group_factor(scales, g);
    for (int r = 0; r < bits; ++r) {
      out[r].min += f * static_cast<double>(table[r].min);
      out[r].max += f * static_cast<double>(table[r].max);
    }
  }
  return out;
}

double mx_partial_score(std::span<const std::int8_t> q_row, const BitPlaneSet& key, const MxScales& scales,
                        int round) {
  const std::size_t groups = check_groups(q_row.size(), scales);
  double s = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    std::int64_t acc = 0;
    for (int r = 0; r <= round; ++r) {
      std::int64_t dot = 0;
      for (std::size_t j = g * scales.group_size; j < (g + 1) * scales.group_size; ++j) {
        if (key.bit(r, j)) dot += q_row[j];
      }
      acc += plane_weight(r, key.bits()) * dot;
    }
    s += group_factor(scales, g) * static_cast<double>(acc);
  }
  return s;
}

double mx_exact_dot(std::span<const std::int8_t> q_row, std::span<const std::int8_t> k_row, const MxScales& scales) {
  const std::size_t groups = check_groups(q_row.size(), scales);
  double s = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto off = g * scales.group_size;
    s += group_factor(scales, g) *
         static_cast<double>(exact_dot(q_row.subspan(off, scales.group_size), k_row.subspan(off, scales.group_size)));
  }
  return s;
}

}  // namespace pade
