#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pade/bitplane.hpp"
#include "pade/buigf.hpp"
#include "pade/matrix.hpp"

namespace pade {

// ---------------------------------------------------------------------------
// Dense oracles (double precision throughout)
// ---------------------------------------------------------------------------

/// Two-pass softmax.
std::vector<double> softmax(std::span<const double> logits);

/// softmax(Q K^T / sqrt(d)) V, row by row.
RealMatrix dense_attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v);

/// Logits of one quantized query row against every key: exact integer dot
/// products times `score_scale`.
std::vector<double> quantized_logits(std::span<const std::int8_t> q_row, const QuantizedMatrix& keys,
                                     double score_scale);

/// Weight of the smaller of two logits separated by `delta`: 1 / (1 + e^delta).
double softmax_pair_weight(double delta);

/// True when that weight is strictly below e^-delta.
bool softmax_decay_check(double x0, double delta);

// ---------------------------------------------------------------------------
// Synthetic workloads
// ---------------------------------------------------------------------------

enum class Generator { Uniform, Peaked, Locality };
enum class Phase { Prefill, Decode };

struct WorkloadSpec {
  Generator generator = Generator::Peaked;
  Phase phase = Phase::Prefill;
  std::size_t seq_len = 256;
  std::size_t head_dim = 64;
  std::size_t num_queries = 8;  // per head
  std::size_t num_heads = 1;
  int bits = 8;
  // peaked
  std::size_t dominant = 4;
  double margin = 40.0;  // logits
  // locality
  double head_frac = 0.1;
  double tail_frac = 0.1;
  double boost = 3.0;  // logits
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const WorkloadSpec&) const = default;
};

struct HeadData {
  RealMatrix q, k, v;
  QuantizedMatrix q_int, k_int, v_int;

  /// Integer score -> logit factor: scale_Q * scale_K / sqrt(d).
  double score_scale() const;
  RealMatrix v_dequantized() const { return dequantize(v_int); }
};

struct Workload {
  WorkloadSpec spec;
  std::vector<HeadData> heads;
};

Workload generate_workload(const WorkloadSpec& spec);

/// Structured-text round trip (JSON) of the generator spec.
std::string export_workload_spec(const WorkloadSpec& spec);
WorkloadSpec import_workload_spec(const std::string& text);

std::string to_string(Generator g);
std::string to_string(Phase p);
Generator parse_generator(const std::string& s);
Phase parse_phase(const std::string& s);

/// PruneConfig with the head's score scale filled in.
PruneConfig prune_config_for(const HeadData& head, PruneConfig base);

/// Dense attention over the dequantized INT8 operands of one head (quantized
/// logits, double precision softmax).
RealMatrix dense_quantized_attention(const HeadData& head);

// ---------------------------------------------------------------------------
// Accuracy
// ---------------------------------------------------------------------------

struct AccuracyReport {
  double max_abs_error = 0.0;
  std::vector<double> cosine;  // per row
  double retained_fraction = 0.0;
  double pruned_weight_max = 0.0;

  double min_cosine() const;
};

/// `retained[i][j]` flags key j of row i; `logits[i]` are that row's dense
/// logits, used to compute the softmax weight of every pruned key.
AccuracyReport compare(const RealMatrix& sparse, const RealMatrix& dense,
                       std::span<const std::vector<bool>> retained, std::span<const std::vector<double>> logits);

/// Merges per-head reports: max of maxima, concatenated cosines, key-weighted retained fraction.
AccuracyReport merge_reports(std::span<const AccuracyReport> parts, std::span<const std::size_t> keys_per_part);

}  // namespace pade
