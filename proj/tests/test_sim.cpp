#include <stdexcept>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pade/sim.hpp"

using namespace pade;

namespace {

Workload make(Generator g, std::uint64_t seed, std::size_t seq = 128, std::size_t queries = 8) {
  WorkloadSpec spec;
  spec.generator = g;
  spec.seq_len = seq;
  spec.num_queries = queries;
  spec.seed = seed;
  return generate_workload(spec);
}

const PruneConfig kPrune{0.5, 5.0, 8, 1.0};

}  // namespace

TEST_CASE("mode names round trip") {
  for (auto m : {ComputeMode::Dense, ComputeMode::NaiveBitSerial, ComputeMode::BS, ComputeMode::BS_OOE,
                 ComputeMode::BS_OOE_ISTA}) {
    CHECK(parse_compute_mode(to_string(m)) == m);
  }
  CHECK(parse_layout("row_major") == Layout::RowMajor);
  CHECK(parse_tile_order("left_to_right") == TileOrder::LeftToRight);
  CHECK_THROWS_AS(parse_compute_mode("turbo"), std::invalid_argument);
}

TEST_CASE("config validation") {
  const auto w = make(Generator::Peaked, 1, 64);
  SimConfig cfg;
  cfg.scoreboard_capacity = 0;
  CHECK_THROWS_AS(run(w, cfg, kPrune), std::invalid_argument);
  SimConfig c2;
  c2.rows = 0;
  CHECK_THROWS_AS(run(w, c2, kPrune), std::invalid_argument);
  PruneConfig p4 = kPrune;
  p4.bits = 4;
  CHECK_THROWS_AS(run(w, SimConfig{}, p4), std::invalid_argument);
}

TEST_CASE("deterministic replay") {
  const auto w = make(Generator::Locality, 9);
  SimConfig cfg;
  cfg.record_trace = true;
  const auto a = run(w, cfg, kPrune);
  const auto b = run(w, cfg, kPrune);
  CHECK(a.metrics == b.metrics);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].cycle == b.trace[i].cycle);
    CHECK(a.trace[i].key == b.trace[i].key);
  }
  CHECK(a.k_request_stream == b.k_request_stream);
}

TEST_CASE("outputs are exactly the tiled softmax over the simulator's own tiles") {
  for (auto g : {Generator::Peaked, Generator::Locality, Generator::Uniform}) {
    const auto w = make(g, 4);
    for (auto mode : {ComputeMode::BS_OOE, ComputeMode::BS_OOE_ISTA, ComputeMode::Dense}) {
      SimConfig cfg;
      cfg.mode = mode;
      const auto res = run(w, cfg, kPrune);
      REQUIRE(res.queries.size() == w.spec.num_queries);
      const auto& h = w.heads[0];
      const auto v = h.v_dequantized();
      for (const auto& q : res.queries) {
        std::vector<std::size_t> order(q.tiles.size());
        std::iota(order.begin(), order.end(), 0);
        const auto state = run_tiles<float>(q.tiles, order, h.score_scale(), v);
        CHECK(finalize(state) == q.output);
        CHECK(state.rescale_ops == q.rescale_ops);
        for (const auto& t : q.tiles) {
          if (mode == ComputeMode::BS_OOE_ISTA) CHECK(t.size() <= cfg.tile_size);
          for (const auto& rk : t) CHECK(rk.score == oracle::dot(h.q_int.row(q.query), h.k_int.row(rk.key)));
        }
      }
    }
  }
}

TEST_CASE("single in-order lane retains exactly what the functional filter retains") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = make(Generator::Locality, seed, 96, 4);
    const auto& h = w.heads[0];
    const auto kp = decompose_all(h.k_int);
    for (auto mode : {ComputeMode::NaiveBitSerial, ComputeMode::BS}) {
      SimConfig cfg;
      cfg.rows = 1;
      cfg.lanes_per_row = 1;
      cfg.mode = mode;
      const auto res = run(w, cfg, kPrune);
      for (const auto& q : res.queries) {
        std::set<std::size_t> got;
        for (const auto& t : q.tiles) {
          for (const auto& rk : t) got.insert(rk.key);
        }
        const auto ref = filter_row(h.q_int.row(q.query), kp, prune_config_for(h, kPrune)).retained_keys();
        CHECK(got == std::set<std::size_t>(ref.begin(), ref.end()));
      }
    }
  }
}

TEST_CASE("accounting identities") {
  const auto w = make(Generator::Peaked, 2, 256);
  for (auto mode : {ComputeMode::Dense, ComputeMode::NaiveBitSerial, ComputeMode::BS, ComputeMode::BS_OOE,
                    ComputeMode::BS_OOE_ISTA}) {
    SimConfig cfg;
    cfg.mode = mode;
    const auto m = run(w, cfg, kPrune).metrics;
    CAPTURE(to_string(mode));
    CHECK(m.total_keys == w.spec.seq_len * w.spec.num_queries);
    CHECK(m.retained_keys <= m.total_keys);
    CHECK(m.max_scoreboard_occupancy <= cfg.scoreboard_capacity);
    CHECK(m.bits_fetched == m.dram_transactions * cfg.dram.bytes_per_transaction * 8);
    CHECK(m.lane_busy.size() == cfg.rows * cfg.lanes_per_row);
    CHECK(std::accumulate(m.lane_busy.begin(), m.lane_busy.end(), std::uint64_t{0}) == m.lane_busy_cycles);
    CHECK(m.utilization == doctest::Approx(static_cast<double>(m.lane_busy_cycles) /
                                           static_cast<double>(m.lane_busy.size() * m.total_cycles)));
    CHECK(m.utilization <= 1.0);
    const auto& e = cfg.energy;
    CHECK(m.energy_dram_pj == doctest::Approx(e.dram_pj_per_bit * static_cast<double>(m.bits_fetched)));
    CHECK(m.energy_sram_pj == doctest::Approx(e.sram_pj_per_access * static_cast<double>(m.sram_accesses)));
    CHECK(m.energy_pe_pj ==
          doctest::Approx(e.pe_pj_per_cycle * static_cast<double>(m.lane_busy_cycles + m.vpu_busy_cycles)));
    CHECK(m.energy_pj == doctest::Approx(m.energy_dram_pj + m.energy_sram_pj + m.energy_pe_pj));
    if (mode == ComputeMode::Dense) {
      CHECK(m.planes_computed == m.total_keys * 8);
      CHECK(m.retained_keys == m.total_keys);
    }
    if (mode == ComputeMode::BS || mode == ComputeMode::NaiveBitSerial) CHECK(m.max_scoreboard_occupancy <= 1);
  }
}

TEST_CASE("trace: every query-key pair ends in exactly one prune or retain") {
  const auto w = make(Generator::Locality, 3, 128, 4);
  SimConfig cfg;
  cfg.record_trace = true;
  const auto res = run(w, cfg, kPrune);
  std::map<std::pair<std::int64_t, std::int64_t>, int> ends;
  std::uint64_t last = 0;
  std::size_t retains = 0, flushed = 0;
  for (const auto& e : res.trace) {
    if (e.action == TraceAction::Prune || e.action == TraceAction::Retain) {
      ++ends[{e.lane / static_cast<std::int64_t>(cfg.lanes_per_row), e.key}];
      retains += e.action == TraceAction::Retain;
    }
    if (e.action == TraceAction::TileFlush) flushed += static_cast<std::size_t>(e.plane);
    if (e.action == TraceAction::Compute) {
      CHECK(e.cycle >= last);
      last = e.cycle;
    }
  }
  CHECK(ends.size() == w.spec.seq_len * w.spec.num_queries);
  for (const auto& [k, n] : ends) CHECK(n == 1);
  CHECK(retains == res.metrics.retained_keys);
  CHECK(flushed == res.metrics.retained_keys);
}

TEST_CASE("bidirectional sparsity never slows the in-order pipeline; out-of-order raises utilization") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    WorkloadSpec spec;
    spec.generator = Generator::Locality;
    spec.boost = 5.0;
    spec.seed = seed;
    const auto w = generate_workload(spec);
    SimConfig cfg;
    cfg.mode = ComputeMode::NaiveBitSerial;
    const auto naive = run(w, cfg, kPrune).metrics;
    cfg.mode = ComputeMode::BS;
    const auto bs = run(w, cfg, kPrune).metrics;
    cfg.mode = ComputeMode::BS_OOE;
    const auto ooe = run(w, cfg, kPrune).metrics;
    CHECK(bs.total_cycles <= naive.total_cycles);
    CHECK(ooe.utilization > bs.utilization);
  }
}

TEST_CASE("more scoreboard entries never reduce utilization much and saturate") {
  const auto w = make(Generator::Locality, 11, 256);
  double prev = 0.0;
  for (std::size_t cap : {1, 4, 16, 64}) {
    SimConfig cfg;
    cfg.mode = ComputeMode::BS_OOE;
    cfg.scoreboard_capacity = cap;
    const auto m = run(w, cfg, kPrune).metrics;
    CHECK(m.max_scoreboard_occupancy <= cap);
    CHECK(m.utilization >= prev * 0.9);
    prev = m.utilization;
  }
}

TEST_CASE("decode phase and multiple heads") {
  WorkloadSpec spec;
  spec.phase = Phase::Decode;
  spec.num_heads = 4;
  spec.num_queries = 1;
  spec.seed = 8;
  const auto w = generate_workload(spec);
  const auto res = run(w, SimConfig{}, kPrune);
  CHECK(res.queries.size() == 4);
  std::set<std::size_t> heads;
  for (const auto& q : res.queries) heads.insert(q.head);
  CHECK(heads.size() == 4);
}

TEST_CASE("ablation stage list") {
  const auto w = make(Generator::Peaked, 1);
  const auto st = ablate(w, SimConfig{}, kPrune);
  REQUIRE(st.size() == 4);
  CHECK(st[0].name == "Dense");
  CHECK(st[1].name == "+BUI-GF");
  CHECK(st[2].name == "+BS-OOE");
  CHECK(st[3].name == "+ISTA");
  CHECK(st[3].mode == ComputeMode::BS_OOE_ISTA);
}
