#include <stdexcept>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pade/report.hpp"

using namespace pade;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

RunConfig small_config() {
  auto c = parse_run_config(R"({"seed": 5, "repetitions": 2, "threads": 2, "workload": {"seq_len": 128}})");
  return c;
}

}  // namespace

TEST_CASE("format_double round trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -0.0, 5.0}) CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(5.0) == "5");
}

TEST_CASE("CSV and JSON run reports agree on every shared field") {
  const auto cfg = small_config();
  const auto recs = run_repetitions(cfg);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].seed == 6);
  const auto csv = parse_csv(run_report_csv(recs));
  const auto js = nlohmann::json::parse(run_report_json(cfg, recs));
  REQUIRE(csv.size() == 3);
  for (std::size_t r = 0; r < 2; ++r) {
    const auto& obj = js["runs"][r];
    for (std::size_t c = 0; c < csv[0].size(); ++c) {
      const auto& key = csv[0][c];
      REQUIRE(obj.contains(key));
      CHECK(std::stod(csv[r + 1][c]) == obj[key].get<double>());
    }
  }
  CHECK(js["config"]["seed"] == 5);
}

TEST_CASE("sweep rows: columns, monotone retention, safety bound") {
  auto cfg = small_config();
  const auto rows = run_sweep(cfg);
  REQUIRE(rows.size() == 10);
  const auto csv = parse_csv(sweep_report_csv(rows));
  CHECK(csv[0] == std::vector<std::string>{"alpha", "retained_fraction", "cycles", "bits_fetched", "energy_pj",
                                           "max_abs_error", "pruned_weight_max"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) CHECK(rows[i].retained_fraction >= rows[i - 1].retained_fraction);
    CHECK(rows[i].pruned_weight_max < std::exp(-rows[i].alpha * cfg.prune.radius));
  }
}

TEST_CASE("single-point sweep equals run") {
  auto cfg = small_config();
  cfg.repetitions = 1;
  cfg.sweep_alphas = {cfg.prune.alpha};
  const auto s = run_sweep(cfg);
  const auto r = run_repetitions(cfg);
  CHECK(s[0].cycles == static_cast<double>(r[0].metrics.total_cycles));
  CHECK(s[0].bits_fetched == static_cast<double>(r[0].metrics.bits_fetched));
  CHECK(s[0].energy_pj == r[0].metrics.energy_pj);
  CHECK(s[0].retained_fraction == r[0].accuracy.retained_fraction);
  CHECK(s[0].max_abs_error == r[0].accuracy.max_abs_error);
}

TEST_CASE("sweep is independent of the worker count") {
  auto cfg = small_config();
  cfg.threads = 1;
  const auto a = sweep_report_csv(run_sweep(cfg));
  cfg.threads = 4;
  CHECK(sweep_report_csv(run_sweep(cfg)) == a);
}

TEST_CASE("ablation: four stages per seed, deltas recomputable") {
  const auto cfg = small_config();
  const auto rows = run_ablation(cfg);
  REQUIRE(rows.size() == 8);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i % 4 == 0) {
      CHECK(rows[i].stage == "Dense");
      CHECK(rows[i].cycles_delta_pct == 0.0);
      continue;
    }
    const double prev = static_cast<double>(rows[i - 1].metrics.total_cycles);
    const double now = static_cast<double>(rows[i].metrics.total_cycles);
    CHECK(rows[i].cycles_delta_pct == 100.0 * (now - prev) / prev);
  }
  const auto csv = parse_csv(ablate_report_csv(rows));
  CHECK(csv.size() == 9);
}

TEST_CASE("reports are byte-identical across repeats") {
  const auto cfg = small_config();
  CHECK(run_report_json(cfg, run_repetitions(cfg)) == run_report_json(cfg, run_repetitions(cfg)));
  CHECK(ablate_report_csv(run_ablation(cfg)) == ablate_report_csv(run_ablation(cfg)));
}

TEST_CASE("trace lines are JSON objects") {
  const std::vector<TraceEvent> ev{{3, 1, 7, 2, TraceAction::Prune}};
  const auto line = trace_jsonl(ev);
  CHECK(line == "{\"cycle\":3,\"lane\":1,\"key\":7,\"plane\":2,\"action\":\"prune\"}\n");
}
