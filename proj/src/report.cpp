#include "pade/report.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>
#include <variant>

#include "json.hpp"

namespace pade {

namespace {

using nlohmann::ordered_json;
using Cell = std::variant<std::uint64_t, double, std::string>;
using Fields = std::vector<std::pair<std::string, Cell>>;

void append_metrics(Fields& f, const SimMetrics& m) {
  f.emplace_back("total_cycles", m.total_cycles);
  f.emplace_back("utilization", m.utilization);
  f.emplace_back("dram_transactions", m.dram_transactions);
  f.emplace_back("bits_fetched", m.bits_fetched);
  f.emplace_back("row_activations", m.row_activations);
  f.emplace_back("sram_accesses", m.sram_accesses);
  f.emplace_back("planes_computed", m.planes_computed);
  f.emplace_back("lane_busy_cycles", m.lane_busy_cycles);
  f.emplace_back("vpu_busy_cycles", m.vpu_busy_cycles);
  f.emplace_back("v_fetches", m.v_fetches);
  f.emplace_back("rescale_ops", m.rescale_ops);
  f.emplace_back("retained_keys", m.retained_keys);
  f.emplace_back("total_keys", m.total_keys);
  f.emplace_back("max_scoreboard_occupancy", m.max_scoreboard_occupancy);
  f.emplace_back("stall_intra_pe", m.stalls.intra_pe);
  f.emplace_back("stall_inter_pe", m.stalls.inter_pe);
  f.emplace_back("stall_memory", m.stalls.memory);
  f.emplace_back("energy_dram_pj", m.energy_dram_pj);
  f.emplace_back("energy_sram_pj", m.energy_sram_pj);
  f.emplace_back("energy_pe_pj", m.energy_pe_pj);
  f.emplace_back("energy_pj", m.energy_pj);
}

Fields run_fields(const RunRecord& r) {
  Fields f;
  f.emplace_back("seed", r.seed);
  append_metrics(f, r.metrics);
  f.emplace_back("max_abs_error", r.accuracy.max_abs_error);
  f.emplace_back("min_cosine", r.accuracy.min_cosine());
  f.emplace_back("retained_fraction", r.accuracy.retained_fraction);
  f.emplace_back("pruned_weight_max", r.accuracy.pruned_weight_max);
  return f;
}

Fields sweep_fields(const SweepRow& r) {
  return {{"alpha", r.alpha},
          {"retained_fraction", r.retained_fraction},
          {"cycles", r.cycles},
          {"bits_fetched", r.bits_fetched},
          {"energy_pj", r.energy_pj},
          {"max_abs_error", r.max_abs_error},
          {"pruned_weight_max", r.pruned_weight_max}};
}

Fields ablate_fields(const AblateRow& r) {
  const SimMetrics& m = r.metrics;
  return {{"seed", r.seed},
          {"stage", r.stage},
          {"mode", to_string(r.mode)},
          {"cycles", m.total_cycles},
          {"cycles_delta_pct", r.cycles_delta_pct},
          {"energy_pj", m.energy_pj},
          {"energy_delta_pct", r.energy_delta_pct},
          {"energy_dram_pj", m.energy_dram_pj},
          {"energy_sram_pj", m.energy_sram_pj},
          {"energy_pe_pj", m.energy_pe_pj},
          {"bits_fetched", m.bits_fetched},
          {"sram_accesses", m.sram_accesses},
          {"lane_busy_cycles", m.lane_busy_cycles},
          {"vpu_busy_cycles", m.vpu_busy_cycles},
          {"utilization", m.utilization},
          {"retained_keys", m.retained_keys}};
}

std::string cell_text(const Cell& c) {
  if (const auto* u = std::get_if<std::uint64_t>(&c)) return std::to_string(*u);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return std::get<std::string>(c);
}

ordered_json cell_json(const Cell& c) {
  if (const auto* u = std::get_if<std::uint64_t>(&c)) return *u;
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::get<std::string>(c);
}

ordered_json to_json(const Fields& f) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : f) j[k] = cell_json(v);
  return j;
}

std::string to_csv(const std::vector<Fields>& rows) {
  std::ostringstream out;
  if (rows.empty()) return "";
  for (std::size_t i = 0; i < rows.front().size(); ++i) out << (i ? "," : "") << rows.front()[i].first;
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << cell_text(r[i].second);
    out << '\n';
  }
  return out.str();
}

std::string json_report(const std::string& command, const RunConfig& cfg, const std::string& key,
                        const std::vector<Fields>& rows, const std::vector<ordered_json>& extra = {}) {
  ordered_json j;
  j["command"] = command;
  j["config"] = ordered_json::parse(dump_run_config(cfg));
  ordered_json arr = ordered_json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ordered_json row = to_json(rows[i]);
    if (i < extra.size()) {
      for (const auto& [k, v] : extra[i].items()) row[k] = v;
    }
    arr.push_back(std::move(row));
  }
  j[key] = std::move(arr);
  return j.dump(2) + "\n";
}

double pct(double now, double before) { return before != 0.0 ? 100.0 * (now - before) / before : 0.0; }

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

AccuracyReport accuracy_of(const Workload& workload, const SimResult& result) {
  const auto& spec = workload.spec;
  std::vector<AccuracyReport> parts;
  std::vector<std::size_t> sizes;
  for (std::size_t h = 0; h < workload.heads.size(); ++h) {
    const HeadData& head = workload.heads[h];
    const RealMatrix dense = dense_quantized_attention(head);
    RealMatrix sparse(spec.num_queries, spec.head_dim);
    std::vector<std::vector<bool>> retained(spec.num_queries, std::vector<bool>(spec.seq_len, false));
    std::vector<std::vector<double>> logits;
    for (const QueryResult& q : result.queries) {
      if (q.head != h) continue;
      for (std::size_t c = 0; c < q.output.size(); ++c) sparse(q.query, c) = q.output[c];
      for (const Tile& t : q.tiles) {
        for (const RetainedKey& rk : t) retained[q.query][rk.key] = true;
      }
    }
    for (std::size_t i = 0; i < spec.num_queries; ++i) {
      logits.push_back(quantized_logits(head.q_int.values.row(i), head.k_int, head.score_scale()));
    }
    parts.push_back(compare(sparse, dense, retained, logits));
    sizes.push_back(spec.num_queries * spec.seq_len);
  }
  return merge_reports(parts, sizes);
}

RunRecord run_once(const RunConfig& cfg, std::uint64_t seed, double alpha) {
  WorkloadSpec spec = cfg.workload;
  spec.seed = seed;
  const Workload w = generate_workload(spec);
  PruneConfig prune = cfg.prune;
  prune.alpha = alpha;
  prune.bits = spec.bits;
  const SimResult res = run(w, cfg.sim, prune);
  return RunRecord{seed, res.metrics, accuracy_of(w, res)};
}

std::vector<RunRecord> run_repetitions(const RunConfig& cfg) {
  std::vector<RunRecord> out;
  for (std::size_t r = 0; r < cfg.repetitions; ++r) out.push_back(run_once(cfg, cfg.seed + r, cfg.prune.alpha));
  return out;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg) {
  const std::size_t n = cfg.sweep_alphas.size();
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        SweepRow row;
        row.alpha = cfg.sweep_alphas[i];
        const double reps = static_cast<double>(cfg.repetitions);
        for (std::size_t r = 0; r < cfg.repetitions; ++r) {
          const RunRecord rec = run_once(cfg, cfg.seed + r, row.alpha);
          row.retained_fraction += rec.accuracy.retained_fraction / reps;
          row.cycles += static_cast<double>(rec.metrics.total_cycles) / reps;
          row.bits_fetched += static_cast<double>(rec.metrics.bits_fetched) / reps;
          row.energy_pj += rec.metrics.energy_pj / reps;
          row.max_abs_error = std::max(row.max_abs_error, rec.accuracy.max_abs_error);
          row.pruned_weight_max = std::max(row.pruned_weight_max, rec.accuracy.pruned_weight_max);
        }
        rows[i] = row;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<AblateRow> run_ablation(const RunConfig& cfg) {
  std::vector<AblateRow> out;
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    WorkloadSpec spec = cfg.workload;
    spec.seed = cfg.seed + r;
    const Workload w = generate_workload(spec);
    PruneConfig prune = cfg.prune;
    prune.bits = spec.bits;
    const auto stages = ablate(w, cfg.sim, prune);
    for (std::size_t s = 0; s < stages.size(); ++s) {
      AblateRow row{spec.seed, stages[s].name, stages[s].mode, stages[s].metrics, 0.0, 0.0};
      if (s > 0) {
        const SimMetrics& prev = stages[s - 1].metrics;
        row.cycles_delta_pct =
            pct(static_cast<double>(row.metrics.total_cycles), static_cast<double>(prev.total_cycles));
        row.energy_delta_pct = pct(row.metrics.energy_pj, prev.energy_pj);
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::string run_report_json(const RunConfig& cfg, std::span<const RunRecord> records) {
  std::vector<Fields> rows;
  std::vector<ordered_json> extra;
  for (const auto& r : records) {
    rows.push_back(run_fields(r));
    extra.push_back(ordered_json{{"lane_busy", r.metrics.lane_busy}, {"cosine", r.accuracy.cosine}});
  }
  return json_report("run", cfg, "runs", rows, extra);
}

std::string run_report_csv(std::span<const RunRecord> records) {
  std::vector<Fields> rows;
  for (const auto& r : records) rows.push_back(run_fields(r));
  return to_csv(rows);
}

std::string sweep_report_json(const RunConfig& cfg, std::span<const SweepRow> rows) {
  std::vector<Fields> f;
  for (const auto& r : rows) f.push_back(sweep_fields(r));
  return json_report("sweep", cfg, "points", f);
}

std::string sweep_report_csv(std::span<const SweepRow> rows) {
  std::vector<Fields> f;
  for (const auto& r : rows) f.push_back(sweep_fields(r));
  return to_csv(f);
}

std::string ablate_report_json(const RunConfig& cfg, std::span<const AblateRow> rows) {
  std::vector<Fields> f;
  for (const auto& r : rows) f.push_back(ablate_fields(r));
  return json_report("ablate", cfg, "stages", f);
}

std::string ablate_report_csv(std::span<const AblateRow> rows) {
  std::vector<Fields> f;
  for (const auto& r : rows) f.push_back(ablate_fields(r));
  return to_csv(f);
}

std::string trace_jsonl(std::span<const TraceEvent> events) {
  std::string out;
  for (const auto& e : events) {
    ordered_json j;
    j["cycle"] = e.cycle;
    j["lane"] = e.lane;
    j["key"] = e.key;
    j["plane"] = e.plane;
    j["action"] = to_string(e.action);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace pade
