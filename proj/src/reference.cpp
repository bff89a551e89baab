#include "pade/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace pade {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double l = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    l += out[i];
  }
  for (auto& w : out) w /= l;
  return out;
}

RealMatrix dense_attention(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v) {
  if (q.cols() != k.cols() || k.rows() != v.rows()) throw std::invalid_argument("dense_attention: shape mismatch");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  RealMatrix out(q.rows(), v.cols());
  std::vector<double> logits(k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) s += q(i, c) * k(j, c);
      logits[j] = s * inv_sqrt_d;
    }
    const auto w = softmax(logits);
    for (std::size_t j = 0; j < k.rows(); ++j) {
      for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += w[j] * v(j, c);
    }
  }
  return out;
}

std::vector<double> quantized_logits(std::span<const std::int8_t> q_row, const QuantizedMatrix& keys,
                                     double score_scale) {
  std::vector<double> out(keys.rows());
  for (std::size_t j = 0; j < keys.rows(); ++j) {
    out[j] = static_cast<double>(exact_dot(q_row, keys.row(j))) * score_scale;
  }
  return out;
}

double softmax_pair_weight(double delta) { return 1.0 / (1.0 + std::exp(delta)); }

bool softmax_decay_check(double x0, double delta) {
  if (!std::isfinite(x0) || !std::isfinite(delta) || delta < 0.0) {
    throw std::invalid_argument("softmax_decay_check: finite x0 and delta >= 0 required");
  }
  const double pair[2] = {x0, x0 + delta};
  return softmax(pair)[0] < std::exp(-delta);
}

void WorkloadSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
  };
  if (seq_len == 0) fail("seq_len", "must be positive");
  if (head_dim == 0 || head_dim % 8 != 0) fail("head_dim", "must be a positive multiple of 8");
  if (num_queries == 0) fail("num_queries", "must be positive");
  if (num_heads == 0) fail("num_heads", "must be positive");
  if (bits != 4 && bits != 8) fail("bits", "must be 4 or 8");
  if (generator == Generator::Peaked) {
    if (dominant == 0 || dominant > seq_len) fail("dominant", "must be in [1, seq_len]");
    if (!(margin >= 0.0) || !std::isfinite(margin)) fail("margin", "must be finite and non-negative");
  }
  if (!(head_frac >= 0.0 && head_frac <= 1.0)) fail("head_frac", "must be within [0, 1]");
  if (!(tail_frac >= 0.0 && tail_frac <= 1.0)) fail("tail_frac", "must be within [0, 1]");
  if (head_frac + tail_frac > 1.0) fail("tail_frac", "head_frac + tail_frac must not exceed 1");
  if (!(boost >= 0.0) || !std::isfinite(boost)) fail("boost", "must be finite and non-negative");
}

double HeadData::score_scale() const {
  return q_int.scale * k_int.scale / std::sqrt(static_cast<double>(q_int.cols()));
}

namespace {

RealMatrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  RealMatrix m(rows, cols);
  for (auto& x : m.data()) x = n01(rng);
  return m;
}

std::vector<double> unit_vector(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> u(d);
  double norm = 0.0;
  for (auto& x : u) {
    x = n01(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : u) x /= norm;
  return u;
}

// Logit offset (along the shared direction) for key j.
std::vector<double> key_offsets(const WorkloadSpec& spec, std::mt19937_64& rng) {
  const std::size_t s = spec.seq_len;
  std::vector<double> offset(s, 0.0);
  if (spec.generator == Generator::Peaked) {
    std::vector<std::size_t> idx(s);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < spec.dominant; ++i) offset[idx[i]] = spec.margin;
  } else if (spec.generator == Generator::Locality) {
    const auto head = static_cast<std::size_t>(std::ceil(spec.head_frac * static_cast<double>(s)));
    const auto tail = static_cast<std::size_t>(std::ceil(spec.tail_frac * static_cast<double>(s)));
    for (std::size_t j = 0; j < std::min(head, s); ++j) offset[j] = spec.boost;
    // Recency ramp: the most recent key carries twice the boost.
    for (std::size_t t = 0; t < tail && t < s; ++t) {
      const std::size_t j = s - tail + t;
      offset[j] = spec.boost * (1.0 + static_cast<double>(t + 1) / static_cast<double>(tail));
    }
  }
  return offset;
}

HeadData make_head(const WorkloadSpec& spec, std::mt19937_64& rng) {
  const std::size_t d = spec.head_dim;
  HeadData h;
  h.q = gaussian(spec.num_queries, d, rng);
  h.k = gaussian(spec.seq_len, d, rng);
  h.v = gaussian(spec.seq_len, d, rng);
  if (spec.generator != Generator::Uniform) {
    // Queries share a direction u with |sqrt(d) u| so an offset c*u on a key
    // lifts its logit by about c.
    const auto u = unit_vector(d, rng);
    const double qgain = std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < h.q.rows(); ++i) {
      for (std::size_t c = 0; c < d; ++c) h.q(i, c) += qgain * u[c];
    }
    const auto offset = key_offsets(spec, rng);
    for (std::size_t j = 0; j < h.k.rows(); ++j) {
      for (std::size_t c = 0; c < d; ++c) h.k(j, c) += offset[j] * u[c];
    }
  }
  h.q_int = quantize(h.q, spec.bits);
  h.k_int = quantize(h.k, spec.bits);
  h.v_int = quantize(h.v, spec.bits);
  return h;
}

}  // namespace

Workload generate_workload(const WorkloadSpec& spec) {
  spec.validate();
  Workload w{spec, {}};
  std::mt19937_64 rng(spec.seed);
  for (std::size_t h = 0; h < spec.num_heads; ++h) w.heads.push_back(make_head(spec, rng));
  return w;
}

std::string to_string(Generator g) {
  switch (g) {
    case Generator::Uniform:
      return "uniform";
    case Generator::Peaked:
      return "peaked";
    case Generator::Locality:
      return "locality";
  }
  return "?";
}

std::string to_string(Phase p) { return p == Phase::Prefill ? "prefill" : "decode"; }

Generator parse_generator(const std::string& s) {
  if (s == "uniform") return Generator::Uniform;
  if (s == "peaked") return Generator::Peaked;
  if (s == "locality") return Generator::Locality;
  throw std::invalid_argument("generator: unknown value '" + s + "'");
}

Phase parse_phase(const std::string& s) {
  if (s == "prefill") return Phase::Prefill;
  if (s == "decode") return Phase::Decode;
  throw std::invalid_argument("phase: unknown value '" + s + "'");
}

std::string export_workload_spec(const WorkloadSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["generator"] = to_string(spec.generator);
  j["phase"] = to_string(spec.phase);
  j["seq_len"] = spec.seq_len;
  j["head_dim"] = spec.head_dim;
  j["num_queries"] = spec.num_queries;
  j["num_heads"] = spec.num_heads;
  j["bits"] = spec.bits;
  j["dominant"] = spec.dominant;
  j["margin"] = spec.margin;
  j["head_frac"] = spec.head_frac;
  j["tail_frac"] = spec.tail_frac;
  j["boost"] = spec.boost;
  return j.dump(2);
}

WorkloadSpec import_workload_spec(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  WorkloadSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.generator = parse_generator(j.at("generator").get<std::string>());
  s.phase = parse_phase(j.at("phase").get<std::string>());
  s.seq_len = j.at("seq_len").get<std::size_t>();
  s.head_dim = j.at("head_dim").get<std::size_t>();
  s.num_queries = j.at("num_queries").get<std::size_t>();
  s.num_heads = j.at("num_heads").get<std::size_t>();
  s.bits = j.at("bits").get<int>();
  s.dominant = j.at("dominant").get<std::size_t>();
  s.margin = j.at("margin").get<double>();
  s.head_frac = j.at("head_frac").get<double>();
  s.tail_frac = j.at("tail_frac").get<double>();
  s.boost = j.at("boost").get<double>();
  s.validate();
  return s;
}

PruneConfig prune_config_for(const HeadData& head, PruneConfig base) {
  base.score_scale = head.score_scale();
  base.bits = head.k_int.bits;
  return base;
}

RealMatrix dense_quantized_attention(const HeadData& head) {
  const auto v = head.v_dequantized();
  RealMatrix out(head.q_int.rows(), v.cols());
  for (std::size_t i = 0; i < head.q_int.rows(); ++i) {
    const auto w = softmax(quantized_logits(head.q_int.row(i), head.k_int, head.score_scale()));
    for (std::size_t j = 0; j < w.size(); ++j) {
      for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += w[j] * v(j, c);
    }
  }
  return out;
}

double AccuracyReport::min_cosine() const {
  return cosine.empty() ? 1.0 : *std::min_element(cosine.begin(), cosine.end());
}

AccuracyReport compare(const RealMatrix& sparse, const RealMatrix& dense,
                       std::span<const std::vector<bool>> retained, std::span<const std::vector<double>> logits) {
  if (sparse.rows() != dense.rows() || sparse.cols() != dense.cols() || retained.size() != sparse.rows() ||
      logits.size() != sparse.rows()) {
    throw std::invalid_argument("compare: dimension mismatch");
  }
  AccuracyReport rep;
  std::size_t kept = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < sparse.rows(); ++i) {
    double dot = 0.0;
    double ns = 0.0;
    double nd = 0.0;
    for (std::size_t c = 0; c < sparse.cols(); ++c) {
      rep.max_abs_error = std::max(rep.max_abs_error, std::abs(sparse(i, c) - dense(i, c)));
      dot += sparse(i, c) * dense(i, c);
      ns += sparse(i, c) * sparse(i, c);
      nd += dense(i, c) * dense(i, c);
    }
    const double denom = std::sqrt(ns) * std::sqrt(nd);
    rep.cosine.push_back(denom > 0.0 ? std::clamp(dot / denom, -1.0, 1.0) : (ns == nd ? 1.0 : 0.0));

    if (retained[i].size() != logits[i].size()) throw std::invalid_argument("compare: dimension mismatch");
    const auto w = softmax(logits[i]);
    for (std::size_t j = 0; j < w.size(); ++j) {
      ++total;
      if (retained[i][j]) {
        ++kept;
      } else {
        rep.pruned_weight_max = std::max(rep.pruned_weight_max, w[j]);
      }
    }
  }
  rep.retained_fraction = total > 0 ? static_cast<double>(kept) / static_cast<double>(total) : 0.0;
  return rep;
}

AccuracyReport merge_reports(std::span<const AccuracyReport> parts, std::span<const std::size_t> keys_per_part) {
  AccuracyReport out;
  double kept = 0.0;
  double total = 0.0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    out.max_abs_error = std::max(out.max_abs_error, parts[p].max_abs_error);
    out.pruned_weight_max = std::max(out.pruned_weight_max, parts[p].pruned_weight_max);
    out.cosine.insert(out.cosine.end(), parts[p].cosine.begin(), parts[p].cosine.end());
    kept += parts[p].retained_fraction * static_cast<double>(keys_per_part[p]);
    total += static_cast<double>(keys_per_part[p]);
  }
  out.retained_fraction = total > 0.0 ? kept / total : 0.0;
  return out;
}

}  // namespace pade
