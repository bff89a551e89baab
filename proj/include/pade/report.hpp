#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pade/run_config.hpp"
#include "pade/sim.hpp"

namespace pade {

struct RunRecord {
  std::uint64_t seed = 0;
  SimMetrics metrics;
  AccuracyReport accuracy;
};

/// Simulator outputs against dense attention over the same INT8 operands.
AccuracyReport accuracy_of(const Workload& workload, const SimResult& result);

/// One simulation at `seed` with the config's prune settings except alpha.
RunRecord run_once(const RunConfig& cfg, std::uint64_t seed, double alpha);

/// Repetition r uses seed cfg.seed + r.
std::vector<RunRecord> run_repetitions(const RunConfig& cfg);

/// One row per alpha. Counters are means over repetitions; error columns are maxima.
struct SweepRow {
  double alpha = 0.0;
  double retained_fraction = 0.0;
  double cycles = 0.0;
  double bits_fetched = 0.0;
  double energy_pj = 0.0;
  double max_abs_error = 0.0;
  double pruned_weight_max = 0.0;
};

/// Grid points run on a worker pool of cfg.threads; rows come back in grid order.
std::vector<SweepRow> run_sweep(const RunConfig& cfg);

struct AblateRow {
  std::uint64_t seed = 0;
  std::string stage;
  ComputeMode mode = ComputeMode::Dense;
  SimMetrics metrics;
  double cycles_delta_pct = 0.0;  // vs the previous stage of the same seed
  double energy_delta_pct = 0.0;
};

std::vector<AblateRow> run_ablation(const RunConfig& cfg);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

std::string run_report_json(const RunConfig& cfg, std::span<const RunRecord> records);
std::string run_report_csv(std::span<const RunRecord> records);
std::string sweep_report_json(const RunConfig& cfg, std::span<const SweepRow> rows);
std::string sweep_report_csv(std::span<const SweepRow> rows);
std::string ablate_report_json(const RunConfig& cfg, std::span<const AblateRow> rows);
std::string ablate_report_csv(std::span<const AblateRow> rows);

/// One JSON object per line: cycle, lane, key, plane, action.
std::string trace_jsonl(std::span<const TraceEvent> events);

}  // namespace pade
