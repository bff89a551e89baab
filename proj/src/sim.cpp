#include "pade/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace pade {

std::string to_string(ComputeMode m) {
  switch (m) {
    case ComputeMode::Dense:
      return "dense";
    case ComputeMode::NaiveBitSerial:
      return "naive_bit_serial";
    case ComputeMode::BS:
      return "bs";
    case ComputeMode::BS_OOE:
      return "bs_ooe";
    case ComputeMode::BS_OOE_ISTA:
      return "bs_ooe_ista";
  }
  return "dense";
}

ComputeMode parse_compute_mode(const std::string& s) {
  for (auto m : {ComputeMode::Dense, ComputeMode::NaiveBitSerial, ComputeMode::BS, ComputeMode::BS_OOE,
                 ComputeMode::BS_OOE_ISTA}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown compute mode '" + s + "'");
}

std::string to_string(Layout l) { return l == Layout::BitInterleaved ? "bit_interleaved" : "row_major"; }

Layout parse_layout(const std::string& s) {
  if (s == "bit_interleaved") return Layout::BitInterleaved;
  if (s == "row_major") return Layout::RowMajor;
  throw std::invalid_argument("unknown layout '" + s + "'");
}

std::string to_string(TileOrder t) { return t == TileOrder::HeadTail ? "head_tail" : "left_to_right"; }

TileOrder parse_tile_order(const std::string& s) {
  if (s == "head_tail") return TileOrder::HeadTail;
  if (s == "left_to_right") return TileOrder::LeftToRight;
  throw std::invalid_argument("unknown tile order '" + s + "'");
}

std::string to_string(TraceAction a) {
  switch (a) {
    case TraceAction::FetchReq:
      return "fetch_req";
    case TraceAction::FetchDone:
      return "fetch_done";
    case TraceAction::Compute:
      return "compute";
    case TraceAction::Prune:
      return "prune";
    case TraceAction::Retain:
      return "retain";
    case TraceAction::TileFlush:
      return "tile_flush";
  }
  return "compute";
}

void SimConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("sim.") + name + ": must be positive");
  };
  positive(rows, "rows");
  positive(lanes_per_row, "lanes_per_row");
  if (scoreboard_capacity == 0) {
    throw std::invalid_argument("sim.scoreboard_capacity: must be positive (lanes hold at least one key)");
  }
  positive(group_size, "group_size");
  positive(tile_size, "tile_size");
  positive(v_capacity, "v_capacity");
  if (k_buffer_bytes < dram.bytes_per_transaction) {
    throw std::invalid_argument("sim.k_buffer_bytes: must hold at least one transaction");
  }
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("sim.energy.") + name + ": must be finite and non-negative");
    }
  };
  non_negative(energy.dram_pj_per_bit, "dram_pj_per_bit");
  non_negative(energy.sram_pj_per_access, "sram_pj_per_access");
  non_negative(energy.pe_pj_per_cycle, "pe_pj_per_cycle");
  dram.validate();
}

void fill_energy(SimMetrics& m, const EnergyConfig& e) {
  m.energy_dram_pj = e.dram_pj_per_bit * static_cast<double>(m.bits_fetched);
  m.energy_sram_pj = e.sram_pj_per_access * static_cast<double>(m.sram_accesses);
  m.energy_pe_pj = e.pe_pj_per_cycle * static_cast<double>(m.lane_busy_cycles + m.vpu_busy_cycles);
  m.energy_pj = m.energy_dram_pj + m.energy_sram_pj + m.energy_pe_pj;
}

namespace {

constexpr std::uint64_t kCycleLimit = std::uint64_t{1} << 36;
constexpr std::uint64_t kVTag = std::uint64_t{1} << 62;

std::uint64_t pack(const KPlaneRef& r) {
  return (static_cast<std::uint64_t>(r.head) << 40) | (static_cast<std::uint64_t>(r.key) << 8) | r.plane;
}

bool in_order(ComputeMode m) { return m == ComputeMode::Dense || m == ComputeMode::NaiveBitSerial || m == ComputeMode::BS; }
bool uses_gsat(ComputeMode m) { return m == ComputeMode::BS || m == ComputeMode::BS_OOE || m == ComputeMode::BS_OOE_ISTA; }

struct Slot {
  std::uint32_t key = 0;
  int plane = 0;    // next plane to compute
  int missing = 0;  // planes still in flight
  std::uint64_t ready_at = 0;
  std::uint64_t seq = 0;
  std::int64_t partial = 0;
};

struct Lane {
  std::vector<std::uint32_t> keys;
  std::size_t next = 0;
  std::vector<Slot> slots;
  int computing = -1;  // index into slots
  std::uint64_t done_at = 0;
  std::int64_t pending_value = 0;
  std::uint64_t fill_until = 0;
  std::uint64_t busy = 0;

  bool drained() const { return next == keys.size() && slots.empty() && computing < 0; }
};

struct Row {
  std::size_t head = 0;
  std::size_t query = 0;
  std::span<const std::int8_t> q;
  GuardedFilter filter;
  QSumTable qsum;
  RetainedKeyBoard board;
  std::deque<Tile> ready;
  TileState state;
  std::vector<RetainedKey> retained;
  std::vector<Lane> lanes;
  bool qk_done = false;
  bool v_done = false;
  std::size_t observed = 0;
  std::size_t flushed = 0;
  QueryResult* out = nullptr;
};

struct Waiter {
  std::size_t row;
  std::size_t lane;
  std::uint32_t key;
};

class Simulator {
 public:
  Simulator(const Workload& w, const SimConfig& cfg, const PruneConfig& prune)
      : w_(w),
        cfg_(cfg),
        prune_(prune),
        bits_(w.spec.bits),
        map_(cfg.dram, cfg.layout, w.spec.seq_len, w.spec.head_dim, w.spec.bits),
        dram_(cfg.dram),
        kbuf_capacity_(std::max<std::size_t>(1, cfg.k_buffer_bytes / map_.plane_bytes())) {
    for (const auto& h : w.heads) planes_.push_back(decompose_all(h.k_int));
    for (const auto& h : w.heads) values_.push_back(h.v_dequantized());
  }

  SimResult run() {
    build_passes();
    std::uint64_t start = 0;
    for (const auto& pass : passes_) start = run_pass(pass, start);
    res_.metrics.total_cycles = start;
    finish_metrics();
    if (cfg_.record_trace) {
      std::stable_sort(res_.trace.begin(), res_.trace.end(),
                       [](const TraceEvent& a, const TraceEvent& b) { return a.cycle < b.cycle; });
    }
    return std::move(res_);
  }

 private:
  using Pass = std::vector<std::pair<std::size_t, std::size_t>>;

  void build_passes() {
    const auto& s = w_.spec;
    std::vector<std::pair<std::size_t, std::size_t>> all;
    if (s.phase == Phase::Prefill) {
      for (std::size_t h = 0; h < s.num_heads; ++h)
        for (std::size_t i = 0; i < s.num_queries; ++i) all.emplace_back(h, i);
    } else {
      for (std::size_t i = 0; i < s.num_queries; ++i)
        for (std::size_t h = 0; h < s.num_heads; ++h) all.emplace_back(h, i);
    }
    for (std::size_t i = 0; i < all.size(); i += cfg_.rows) {
      Pass p;
      for (std::size_t j = i; j < std::min(all.size(), i + cfg_.rows); ++j) {
        // Prefill keeps one head per pass.
        if (s.phase == Phase::Prefill && !p.empty() && all[j].first != p.front().first) {
          passes_.push_back(p);
          p.clear();
        }
        p.push_back(all[j]);
      }
      passes_.push_back(p);
    }
    res_.queries.reserve(all.size());
  }

  std::vector<std::uint32_t> issue_order() const {
    const std::size_t s = w_.spec.seq_len;
    std::vector<std::uint32_t> order;
    order.reserve(s);
    if (cfg_.mode == ComputeMode::BS_OOE_ISTA) {
      const std::size_t blocks = (s + cfg_.tile_size - 1) / cfg_.tile_size;
      for (std::size_t b : tile_order(blocks, cfg_.tile_order)) {
        for (std::size_t k = b * cfg_.tile_size; k < std::min(s, (b + 1) * cfg_.tile_size); ++k) {
          order.push_back(static_cast<std::uint32_t>(k));
        }
      }
    } else {
      for (std::size_t k = 0; k < s; ++k) order.push_back(static_cast<std::uint32_t>(k));
    }
    return order;
  }

  std::uint64_t run_pass(const Pass& pass, std::uint64_t start) {
    rows_.clear();
    rows_.reserve(pass.size());
    const auto order = issue_order();
    const std::uint64_t fill = uses_gsat(cfg_.mode) ? gsat_fill_cycles(cfg_.group_size) : 0;
    for (const auto& [h, i] : pass) {
      const HeadData& head = w_.heads[h];
      const auto q = head.q_int.values.row(i);
      res_.queries.push_back(QueryResult{h, i, {}, {}, 0, {}});
      Row row{h,
              i,
              q,
              GuardedFilter(q, prune_config_for(head, prune_)),
              QSumTable(q, cfg_.group_size),
              RetainedKeyBoard(cfg_.tile_size),
              {},
              TileState(w_.spec.head_dim),
              {},
              std::vector<Lane>(cfg_.lanes_per_row),
              false,
              false,
              0,
              0,
              &res_.queries.back()};
      for (std::size_t j = 0; j < order.size(); ++j) row.lanes[j % cfg_.lanes_per_row].keys.push_back(order[j]);
      for (auto& lane : row.lanes) lane.fill_until = start + fill;
      rows_.push_back(std::move(row));
    }
    vpu_ = Vpu{};
    std::uint64_t cycle = start;
    for (;; ++cycle) {
      for (std::uint64_t block : dram_.tick(cycle)) on_block(block, cycle);
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        Row& row = rows_[r];
        for (std::size_t l = 0; l < row.lanes.size(); ++l) step_lane(r, l, cycle);
        if (!row.qk_done && std::all_of(row.lanes.begin(), row.lanes.end(), [](const Lane& x) { return x.drained(); })) {
          row.qk_done = true;
          if (cfg_.mode == ComputeMode::BS_OOE_ISTA) {
            if (auto t = row.board.flush()) push_tile(r, std::move(*t), cycle);
          }
        }
      }
      step_vpu(cycle);
      if (pass_done()) break;
      if (cycle - start > kCycleLimit) throw std::logic_error("simulator: pass did not terminate");
    }
    for (Row& row : rows_) {
      auto out = finalize(row.state);
      row.out->output.assign(out.begin(), out.end());
      row.out->rescale_ops = row.state.rescale_ops;
      res_.metrics.rescale_ops += row.state.rescale_ops;
      res_.metrics.retained_keys += row.retained.size();
      res_.metrics.total_keys += w_.spec.seq_len;
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (std::size_t l = 0; l < cfg_.lanes_per_row; ++l) lane_busy_[r * cfg_.lanes_per_row + l] += rows_[r].lanes[l].busy;
    }
    return cycle + 1;
  }

  bool pass_done() const {
    if (vpu_.active()) return false;
    const bool ista = cfg_.mode == ComputeMode::BS_OOE_ISTA;
    return std::all_of(rows_.begin(), rows_.end(),
                       [ista](const Row& r) { return r.qk_done && r.ready.empty() && (ista || r.v_done); });
  }

  void trace(std::uint64_t cycle, std::int64_t lane, std::int64_t key, std::int64_t plane, TraceAction a) {
    if (cfg_.record_trace) res_.trace.push_back(TraceEvent{cycle, lane, key, plane, a});
  }

  std::int64_t global_lane(std::size_t r, std::size_t l) const {
    return static_cast<std::int64_t>(r * cfg_.lanes_per_row + l);
  }

  // ---- K path --------------------------------------------------------------

  void request_plane(std::size_t r, std::size_t l, Slot& slot, int plane, std::uint64_t cycle) {
    const KPlaneRef ref{static_cast<std::uint32_t>(rows_[r].head), slot.key, static_cast<std::uint32_t>(plane)};
    trace(cycle, global_lane(r, l), slot.key, plane, TraceAction::FetchReq);
    ++slot.missing;
    if (kbuf_.count(pack(ref)) != 0) {
      ++res_.metrics.sram_accesses;
      --slot.missing;
      slot.ready_at = std::max(slot.ready_at, cycle + cfg_.sram_latency);
      trace(cycle + cfg_.sram_latency, global_lane(r, l), slot.key, plane, TraceAction::FetchDone);
      return;
    }
    res_.k_request_stream.push_back(ref);
    waiters_[pack(ref)].push_back(Waiter{r, l, slot.key});
    const DramCoord coord = map_.k_plane(ref);
    k_blocks_.try_emplace(coord.block, ref);
    dram_.submit(coord);
  }

  void on_block(std::uint64_t block, std::uint64_t cycle) {
    auto kb = k_blocks_.find(block);
    if (kb == k_blocks_.end()) {
      on_v_block(block);
      return;
    }
    const KPlaneRef ref = kb->second;
    k_blocks_.erase(kb);
    ++res_.metrics.sram_accesses;  // buffer fill
    for (const KPlaneRef& p : map_.k_block_planes(ref)) {
      const std::uint64_t id = pack(p);
      if (kbuf_.insert(id).second) {
        kbuf_fifo_.push_back(id);
        while (kbuf_fifo_.size() > kbuf_capacity_) {
          kbuf_.erase(kbuf_fifo_.front());
          kbuf_fifo_.pop_front();
        }
      }
      auto it = waiters_.find(id);
      if (it == waiters_.end()) continue;
      for (const Waiter& wt : it->second) {
        if (wt.row >= rows_.size() || rows_[wt.row].head != p.head) continue;
        Lane& lane = rows_[wt.row].lanes[wt.lane];
        for (Slot& s : lane.slots) {
          if (s.key != wt.key) continue;
          --s.missing;
          s.ready_at = std::max(s.ready_at, cycle + cfg_.sram_latency);
          ++res_.metrics.sram_accesses;
          trace(cycle + cfg_.sram_latency, global_lane(wt.row, wt.lane), wt.key, p.plane, TraceAction::FetchDone);
        }
      }
      waiters_.erase(it);
    }
  }

  // ---- PE lanes ------------------------------------------------------------

  std::size_t capacity() const { return in_order(cfg_.mode) ? 1 : cfg_.scoreboard_capacity; }

  std::size_t plane_cost(const BitPlaneSet& k, int plane) const {
    if (uses_gsat(cfg_.mode)) return 1;
    return std::max<std::size_t>(1, k.popcount(plane));
  }

  void step_lane(std::size_t r, std::size_t l, std::uint64_t cycle) {
    Row& row = rows_[r];
    Lane& lane = row.lanes[l];
    const auto& planes = planes_[row.head];

    if (lane.computing >= 0 && lane.done_at <= cycle) finish_compute(r, l, cycle);

    // One new key per cycle while the scoreboard has room.
    if (lane.next < lane.keys.size() && lane.slots.size() < capacity()) {
      Slot s;
      s.key = lane.keys[lane.next++];
      s.seq = seq_++;
      lane.slots.push_back(s);
      res_.metrics.max_scoreboard_occupancy =
          std::max<std::uint64_t>(res_.metrics.max_scoreboard_occupancy, lane.slots.size());
      Slot& added = lane.slots.back();
      const int n = cfg_.mode == ComputeMode::Dense ? bits_ : 1;
      for (int p = 0; p < n; ++p) request_plane(r, l, added, p, cycle);
    }

    if (lane.computing < 0 && cycle >= lane.fill_until) {
      int pick = -1;
      for (int i = 0; i < static_cast<int>(lane.slots.size()); ++i) {
        const Slot& s = lane.slots[i];
        if (s.missing != 0 || s.ready_at > cycle) continue;
        if (pick < 0 || s.ready_at < lane.slots[pick].ready_at ||
            (s.ready_at == lane.slots[pick].ready_at && s.seq < lane.slots[pick].seq)) {
          pick = i;
        }
      }
      if (pick >= 0) {
        Slot& s = lane.slots[pick];
        const BitPlaneSet& k = planes[s.key];
        std::size_t cost = 0;
        if (cfg_.mode == ComputeMode::Dense) {
          lane.pending_value = exact_dot(row.q, w_.heads[row.head].k_int.values.row(s.key));
          for (int p = 0; p < bits_; ++p) cost += plane_cost(k, p);
        } else {
          cost = plane_cost(k, s.plane);
          if (uses_gsat(cfg_.mode)) {
            const GroupPlan plan = plan_plane(k, s.plane, cfg_.group_size);
            lane.pending_value = plane_weight(s.plane, bits_) * plane_dot_bs(row.q, plan, row.qsum);
          } else {
            lane.pending_value = plane_contribution(row.q, k, s.plane);
          }
        }
        trace(cycle, global_lane(r, l), s.key, s.plane, TraceAction::Compute);
        lane.computing = pick;
        lane.done_at = cycle + cost;
      }
    }

    if (lane.computing >= 0) {
      ++lane.busy;
    } else if (cycle < lane.fill_until) {
      ++res_.metrics.stalls.intra_pe;
    } else if (lane.drained()) {
      if (!row.qk_done) ++res_.metrics.stalls.inter_pe;
    } else if (!in_order(cfg_.mode) && lane.slots.size() >= capacity() && lane.next < lane.keys.size()) {
      ++res_.metrics.stalls.intra_pe;
    } else {
      ++res_.metrics.stalls.memory;
    }
  }

  void finish_compute(std::size_t r, std::size_t l, std::uint64_t cycle) {
    Row& row = rows_[r];
    Lane& lane = row.lanes[l];
    const std::size_t idx = static_cast<std::size_t>(lane.computing);
    lane.computing = -1;
    Slot& s = lane.slots[idx];
    const std::int64_t gl = global_lane(r, l);

    bool retain = false;
    bool evict = false;
    if (cfg_.mode == ComputeMode::Dense) {
      s.partial = lane.pending_value;
      res_.metrics.planes_computed += static_cast<std::uint64_t>(bits_);
      retain = true;
    } else {
      s.partial += lane.pending_value;
      ++res_.metrics.planes_computed;
      if (s.plane == 0) {
        ++row.observed;
        row.out->window_growth.emplace_back(cycle, row.observed);
      }
      if (row.filter.step(s.partial, s.plane) == Decision::Prune) {
        trace(cycle, gl, s.key, s.plane, TraceAction::Prune);
        evict = true;
      } else if (s.plane == bits_ - 1) {
        retain = true;
      } else {
        ++s.plane;
        request_plane(r, l, s, s.plane, cycle);
      }
    }
    if (retain) {
      trace(cycle, gl, s.key, bits_ - 1, TraceAction::Retain);
      row.retained.push_back(RetainedKey{s.key, s.partial});
      if (cfg_.mode == ComputeMode::BS_OOE_ISTA) {
        if (auto t = row.board.push(s.key, s.partial)) push_tile(r, std::move(*t), cycle);
      }
      evict = true;
    }
    if (evict) lane.slots.erase(lane.slots.begin() + static_cast<std::ptrdiff_t>(idx));
  }

  void push_tile(std::size_t r, Tile t, std::uint64_t cycle) {
    Row& row = rows_[r];
    trace(cycle, global_lane(r, 0), static_cast<std::int64_t>(row.flushed++), static_cast<std::int64_t>(t.size()),
          TraceAction::TileFlush);
    row.ready.push_back(std::move(t));
  }

  // ---- V-PU ----------------------------------------------------------------

  struct VBatch {
    FetchSchedule sched;
    std::size_t round = 0;
    std::vector<std::unordered_set<std::uint64_t>> pending;  // blocks outstanding per round
    std::uint64_t tail = 0;                                   // rescale cycles still to charge
  };

  // One batch executes while the next one's V rows are in flight.
  static constexpr std::size_t kVpuDepth = 2;

  struct Vpu {
    std::deque<VBatch> queue;
    std::uint64_t busy_until = 0;
    bool active() const { return !queue.empty(); }
  };

  std::size_t v_id(std::size_t head, std::size_t key) const { return head * w_.spec.seq_len + key; }

  void on_v_block(std::uint64_t block) {
    for (VBatch& b : vpu_.queue) {
      for (std::size_t k = b.round; k < b.pending.size(); ++k) b.pending[k].erase(block);
    }
  }

  bool form_batch() {
    const bool ista = cfg_.mode == ComputeMode::BS_OOE_ISTA;
    std::vector<std::size_t> members;
    std::vector<Tile> tiles;
    if (ista) {
      // Rows hand off tiles together so the scheduler sees their overlap; a backlog forces progress.
      bool aligned = true;
      bool backlog = false;
      bool any = false;
      for (const Row& x : rows_) {
        if (x.ready.empty() && !x.qk_done) aligned = false;
        backlog = backlog || x.ready.size() >= 2;
        any = any || !x.ready.empty();
      }
      if (!any || !(aligned || backlog)) return false;
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].ready.empty()) continue;
        members.push_back(r);
        tiles.push_back(std::move(rows_[r].ready.front()));
        rows_[r].ready.pop_front();
      }
    } else {
      const bool all_done = std::all_of(rows_.begin(), rows_.end(), [](const Row& x) { return x.qk_done; });
      if (!all_done || rows_.front().v_done) return false;
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        members.push_back(r);
        Tile t = rows_[r].retained;
        std::sort(t.begin(), t.end(), [](const RetainedKey& a, const RetainedKey& b) { return a.key < b.key; });
        tiles.push_back(std::move(t));
      }
    }
    if (members.empty()) return false;

    UsagePattern pattern;
    pattern.capacity = cfg_.v_capacity;
    std::uint64_t rescales = 0;
    for (std::size_t m = 0; m < members.size(); ++m) {
      Row& row = rows_[members[m]];
      std::vector<std::size_t> ids;
      for (const auto& rk : tiles[m]) ids.push_back(v_id(row.head, rk.key));
      std::sort(ids.begin(), ids.end());
      pattern.rows.push_back(std::move(ids));

      // Functional result of this tile; timing below only decides when it lands.
      const double scale = w_.heads[row.head].score_scale();
      const RealMatrix& v = values_[row.head];
      std::vector<double> logits;
      std::vector<std::span<const double>> vrows;
      for (const auto& rk : tiles[m]) {
        logits.push_back(static_cast<double>(rk.score) * scale);
        vrows.push_back(v.row(rk.key));
      }
      const std::size_t before = row.state.rescale_ops;
      accumulate_tile<float>(row.state, logits, vrows);
      rescales += row.state.rescale_ops - before;
      row.out->tiles.push_back(std::move(tiles[m]));
      if (!ista) row.v_done = true;
    }

    VBatch b;
    b.sched = ista ? schedule_rars(pattern) : schedule_naive(pattern);
    b.pending.assign(b.sched.rounds.size(), {});
    b.tail = rescales * cfg_.rescale_cycles;
    res_.metrics.v_fetches += b.sched.total_fetches;
    // The whole batch is requested up front; V rows wait in the staging buffer for their round.
    for (std::size_t k = 0; k < b.sched.rounds.size(); ++k) {
      for (std::size_t id : b.sched.rounds[k].fetched) {
        const auto head = static_cast<std::uint32_t>(id / w_.spec.seq_len);
        const auto key = static_cast<std::uint32_t>(id % w_.spec.seq_len);
        for (DramCoord c : map_.v_row(head, key)) {
          // V residency is one round, so every scheduled fetch is its own transaction.
          c.block = kVTag | v_seq_++;
          dram_.submit(c, true);
          b.pending[k].insert(c.block);
        }
      }
    }
    vpu_.queue.push_back(std::move(b));
    return true;
  }

  void step_vpu(std::uint64_t cycle) {
    while (vpu_.queue.size() < kVpuDepth && form_batch()) {
    }
    if (vpu_.busy_until > cycle) {
      ++res_.metrics.vpu_busy_cycles;
      return;
    }
    while (!vpu_.queue.empty()) {
      VBatch& b = vpu_.queue.front();
      const auto& rounds = b.sched.rounds;
      if (b.round < rounds.size()) {
        if (!b.pending[b.round].empty()) return;
        std::size_t width = 1;
        for (const auto& served : rounds[b.round].served) {
          width = std::max(width, served.size());
          res_.metrics.sram_accesses += served.size();
        }
        res_.metrics.sram_accesses += rounds[b.round].fetched.size();
        vpu_.busy_until = cycle + width;
        ++b.round;
        ++res_.metrics.vpu_busy_cycles;
        return;
      }
      if (b.tail > 0) {
        vpu_.busy_until = cycle + b.tail;
        b.tail = 0;
        ++res_.metrics.vpu_busy_cycles;
        return;
      }
      vpu_.queue.pop_front();
      while (vpu_.queue.size() < kVpuDepth && form_batch()) {
      }
    }
  }

  void finish_metrics() {
    SimMetrics& m = res_.metrics;
    m.lane_busy = lane_busy_;
    for (auto b : lane_busy_) m.lane_busy_cycles += b;
    const auto& ds = dram_.stats();
    m.dram_transactions = ds.transactions;
    m.bits_fetched = ds.bytes * 8;
    m.row_activations = ds.row_activations;
    const double denom = static_cast<double>(lane_busy_.size()) * static_cast<double>(m.total_cycles);
    m.utilization = denom > 0 ? static_cast<double>(m.lane_busy_cycles) / denom : 0.0;
    fill_energy(m, cfg_.energy);
  }

  const Workload& w_;
  SimConfig cfg_;
  PruneConfig prune_;
  int bits_;
  AddressMap map_;
  DramModel dram_;
  std::size_t kbuf_capacity_;
  std::vector<std::vector<BitPlaneSet>> planes_;
  std::vector<RealMatrix> values_;
  std::vector<Pass> passes_;
  std::vector<Row> rows_;
  Vpu vpu_;
  std::unordered_set<std::uint64_t> kbuf_;
  std::deque<std::uint64_t> kbuf_fifo_;
  std::unordered_map<std::uint64_t, std::vector<Waiter>> waiters_;
  std::unordered_map<std::uint64_t, KPlaneRef> k_blocks_;
  std::uint64_t seq_ = 0;
  std::uint64_t v_seq_ = 0;
  std::vector<std::uint64_t> lane_busy_ = std::vector<std::uint64_t>(cfg_.rows * cfg_.lanes_per_row, 0);
  SimResult res_;
};

}  // namespace

SimResult run(const Workload& workload, const SimConfig& cfg, const PruneConfig& prune) {
  cfg.validate();
  workload.spec.validate();
  prune.validate();
  if (workload.heads.size() != workload.spec.num_heads) throw std::invalid_argument("workload: head count mismatch");
  if (prune.bits != workload.spec.bits) throw std::invalid_argument("prune.bits: must match workload.bits");
  Simulator sim(workload, cfg, prune);
  return sim.run();
}

std::vector<AblationStage> ablate(const Workload& workload, const SimConfig& base, const PruneConfig& prune) {
  const std::pair<const char*, ComputeMode> stages[] = {{"Dense", ComputeMode::Dense},
                                                         {"+BUI-GF", ComputeMode::NaiveBitSerial},
                                                         {"+BS-OOE", ComputeMode::BS_OOE},
                                                         {"+ISTA", ComputeMode::BS_OOE_ISTA}};
  std::vector<AblationStage> out;
  for (const auto& [name, mode] : stages) {
    SimConfig cfg = base;
    cfg.mode = mode;
    cfg.record_trace = false;
    out.push_back(AblationStage{name, mode, run(workload, cfg, prune).metrics});
  }
  return out;
}

}  // namespace pade
