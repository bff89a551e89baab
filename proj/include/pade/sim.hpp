#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pade/bisparse.hpp"
#include "pade/buigf.hpp"
#include "pade/dram.hpp"
#include "pade/ista.hpp"
#include "pade/rars.hpp"
#include "pade/reference.hpp"

namespace pade {

/// Feature levels, each including the previous one's techniques.
///
///  Dense           bulk K fetch, every plane computed one 1-bit per cycle, no pruning
///  NaiveBitSerial  plane-by-plane fetch with guarded filtering, in order, 1-bit per cycle
///  BS              as above on the grouped ANDer tree (one plane per cycle)
///  BS_OOE          plus out-of-order plane execution over the scoreboard
///  BS_OOE_ISTA     plus tiled V processing overlapped with QK and reuse-aware V scheduling
enum class ComputeMode { Dense, NaiveBitSerial, BS, BS_OOE, BS_OOE_ISTA };

std::string to_string(ComputeMode m);
ComputeMode parse_compute_mode(const std::string& s);
std::string to_string(Layout l);
Layout parse_layout(const std::string& s);
std::string to_string(TileOrder t);
TileOrder parse_tile_order(const std::string& s);

struct EnergyConfig {
  double dram_pj_per_bit = 4.0;
  double sram_pj_per_access = 2.0;
  double pe_pj_per_cycle = 0.5;
};

struct SimConfig {
  std::size_t rows = 8;
  std::size_t lanes_per_row = 16;
  std::size_t scoreboard_capacity = 32;
  std::size_t group_size = 8;
  ComputeMode mode = ComputeMode::BS_OOE_ISTA;
  Layout layout = Layout::BitInterleaved;
  DramConfig dram;
  EnergyConfig energy;
  std::size_t tile_size = 16;
  TileOrder tile_order = TileOrder::HeadTail;
  std::size_t v_capacity = 2;             // V vectors per PE row per round
  std::size_t k_buffer_bytes = 256 * 1024;
  std::uint32_t sram_latency = 1;
  std::uint32_t rescale_cycles = 2;       // V-PU cycles per running-max update
  bool record_trace = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct StallBreakdown {
  std::uint64_t intra_pe = 0;  // GSAT fill, scoreboard full with nothing ready
  std::uint64_t inter_pe = 0;  // lane drained while its row is still running
  std::uint64_t memory = 0;    // waiting on an outstanding plane
  bool operator==(const StallBreakdown&) const = default;
};

struct SimMetrics {
  std::uint64_t total_cycles = 0;
  std::vector<std::uint64_t> lane_busy;  // per global lane, summed over passes
  double utilization = 0.0;              // sum(lane_busy) / (lanes * total_cycles)
  std::uint64_t dram_transactions = 0;
  std::uint64_t bits_fetched = 0;        // DRAM bytes moved * 8
  std::uint64_t row_activations = 0;
  std::uint64_t sram_accesses = 0;
  std::uint64_t planes_computed = 0;
  std::uint64_t lane_busy_cycles = 0;
  std::uint64_t vpu_busy_cycles = 0;
  std::uint64_t v_fetches = 0;
  std::uint64_t rescale_ops = 0;
  std::uint64_t retained_keys = 0;
  std::uint64_t total_keys = 0;  // (query, key) pairs
  std::uint64_t max_scoreboard_occupancy = 0;
  StallBreakdown stalls;
  double energy_dram_pj = 0.0;
  double energy_sram_pj = 0.0;
  double energy_pe_pj = 0.0;
  double energy_pj = 0.0;

  bool operator==(const SimMetrics&) const = default;
};

/// energy = dram_pj_per_bit * bits + sram_pj_per_access * accesses + pe_pj_per_cycle * (lane + V-PU busy).
void fill_energy(SimMetrics& m, const EnergyConfig& e);

enum class TraceAction { FetchReq, FetchDone, Compute, Prune, Retain, TileFlush };
std::string to_string(TraceAction a);

/// One simulator event. For tile_flush, `key` is the row's tile ordinal and
/// `plane` is the tile length.
struct TraceEvent {
  std::uint64_t cycle = 0;
  std::int64_t lane = 0;  // global lane id (row * lanes_per_row + lane)
  std::int64_t key = 0;
  std::int64_t plane = 0;
  TraceAction action = TraceAction::FetchReq;
};

struct QueryResult {
  std::size_t head = 0;
  std::size_t query = 0;
  std::vector<Tile> tiles;  // retained keys in V-PU consumption order
  std::vector<float> output;
  std::size_t rescale_ops = 0;
  std::vector<std::pair<std::uint64_t, std::size_t>> window_growth;  // (cycle, keys observed)
};

struct SimResult {
  SimMetrics metrics;
  std::vector<QueryResult> queries;
  std::vector<TraceEvent> trace;
  std::vector<KPlaneRef> k_request_stream;  // plane requests that missed on-chip buffers, in order
};

/// Event-accurate replay of one workload. Deterministic in (workload, config).
SimResult run(const Workload& workload, const SimConfig& cfg, const PruneConfig& prune);

struct AblationStage {
  std::string name;
  ComputeMode mode;
  SimMetrics metrics;
};

/// Dense -> +BUI-GF -> +BS-OOE -> +ISTA on one fixed workload.
std::vector<AblationStage> ablate(const Workload& workload, const SimConfig& base, const PruneConfig& prune);

}  // namespace pade
