#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pade/matrix.hpp"

namespace pade {

/// Symmetric per-tensor INT quantized operand (Q, K or V).
///
/// `values(i, j) * scale` is the dequantized element. Values always fit the
/// `bits`-wide two's complement range.
struct QuantizedMatrix {
  Matrix<std::int8_t> values;
  double scale = 1.0;
  int bits = 8;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  std::span<const std::int8_t> row(std::size_t r) const { return values.row(r); }
};

/// Quantizes with scale = max_abs / (2^(bits-1) - 1), rounding half away from zero.
/// An all-zero input gets scale 1. Throws std::invalid_argument on non-finite
/// entries or bits outside {4, 8}.
QuantizedMatrix quantize(const RealMatrix& input, int bits = 8);

/// Quantizes onto a caller-chosen grid; values outside the range are clamped.
QuantizedMatrix quantize_with_scale(const RealMatrix& input, double scale, int bits = 8);

RealMatrix dequantize(const QuantizedMatrix& q);

/// Weight carried by plane `round` of a p-bit two's complement value.
/// Plane 0 is the sign plane (-2^(p-1)); plane r >= 1 carries 2^(p-1-r).
constexpr std::int64_t plane_weight(int round, int bits) {
  return round == 0 ? -(std::int64_t{1} << (bits - 1)) : (std::int64_t{1} << (bits - 1 - round));
}

/// MSB-first bit planes of one key vector, packed 64 elements per word.
class BitPlaneSet {
 public:
  BitPlaneSet() = default;
  BitPlaneSet(std::size_t key_index, std::size_t dim, int bits);

  std::size_t key_index() const { return key_index_; }
  std::size_t dim() const { return dim_; }
  int bits() const { return bits_; }
  std::size_t words_per_plane() const { return words_; }

  bool bit(int round, std::size_t j) const {
    return (planes_[round * words_ + j / 64] >> (j % 64)) & 1u;
  }
  void set_bit(int round, std::size_t j) { planes_[round * words_ + j / 64] |= std::uint64_t{1} << (j % 64); }

  std::span<const std::uint64_t> plane(int round) const { return {planes_.data() + round * words_, words_}; }

  /// Number of 1 bits in plane `round`.
  std::size_t popcount(int round) const;

 private:
  std::size_t key_index_ = 0;
  std::size_t dim_ = 0;
  int bits_ = 8;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> planes_;
};

BitPlaneSet decompose(std::span<const std::int8_t> row, int bits, std::size_t key_index = 0);

/// Decomposes every row of `keys`; element i has key_index i.
std::vector<BitPlaneSet> decompose_all(const QuantizedMatrix& keys);

/// Reassembles the integer vector from all planes.
std::vector<std::int32_t> recompose(const BitPlaneSet& planes);

/// Sum of q_j over the set bits of one plane.
std::int64_t plane_dot(std::span<const std::int8_t> q_row, const BitPlaneSet& key, int round);

/// Contribution of plane `round` to the dot product (plane_dot times its weight).
inline std::int64_t plane_contribution(std::span<const std::int8_t> q_row, const BitPlaneSet& key, int round) {
  return plane_weight(round, key.bits()) * plane_dot(q_row, key, round);
}

/// Conservative partial score S^r: planes 0..round known, lower bits taken as zero.
std::int64_t partial_score(std::span<const std::int8_t> q_row, const BitPlaneSet& key, int round);

std::int64_t exact_dot(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

struct Interval {
  std::int64_t min = 0;
  std::int64_t max = 0;
  bool operator==(const Interval&) const = default;
};

/// Per-round bounds on the contribution of the not-yet-seen planes of any key,
/// depending only on the query row. Entry r applies after planes 0..r are known.
class UncertaintyTable {
 public:
  UncertaintyTable() = default;
  UncertaintyTable(int bits, std::vector<Interval> rounds) : bits_(bits), rounds_(std::move(rounds)) {}

  int bits() const { return bits_; }
  const Interval& operator[](int round) const { return rounds_[round]; }
  std::span<const Interval> rounds() const { return rounds_; }

 private:
  int bits_ = 8;
  std::vector<Interval> rounds_;
};

UncertaintyTable build_uncertainty_table(std::span<const std::int8_t> q_row, int bits);

struct RealInterval {
  double min = 0.0;
  double max = 0.0;
};

/// Group-wise scales for MX-style block formats. Each group of `group_size`
/// elements carries its own query and key scale; `output_scale` rescales the
/// accumulated product.
struct MxScales {
  std::size_t group_size = 32;
  std::span<const double> query_scales;
  std::span<const double> key_scales;
  double output_scale = 1.0;
};

/// Per-group uncertainty intervals scaled by dQ*dK/dA and summed across groups.
/// Returns one interval per round.
std::vector<RealInterval> mx_group_bui(std::span<const std::int8_t> q_row, const MxScales& scales, int bits);

/// Group-scaled conservative partial score matching mx_group_bui.
double mx_partial_score(std::span<const std::int8_t> q_row, const BitPlaneSet& key, const MxScales& scales,
                        int round);

/// Group-scaled exact dot product.
double mx_exact_dot(std::span<const std::int8_t> q_row, std::span<const std::int8_t> k_row, const MxScales& scales);

}  // namespace pade
