#include <stdexcept>

#include "doctest.h"
#include "pade/run_config.hpp"

using namespace pade;

namespace {

std::string error_path(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const auto c = parse_run_config(R"({"seed": 3})");
  CHECK(c.seed == 3);
  CHECK(c.workload.seed == 3);
  CHECK(c.prune.alpha == 0.5);
  CHECK(c.prune.radius == 5.0);
  CHECK(c.sim.tile_size == 16);
  CHECK(c.sim.scoreboard_capacity == 32);
  CHECK(c.sim.dram.latency_cycles == 40);
  CHECK(c.sweep_alphas.size() == 10);
}

TEST_CASE("field paths in errors") {
  CHECK(error_path(R"({})") == "seed");
  CHECK(error_path(R"({"seed": 1, "prune": {"alpha": 1.5}})") == "prune.alpha");
  CHECK(error_path(R"({"seed": 1, "prune": {"alpha": "high"}})") == "prune.alpha");
  CHECK(error_path(R"({"seed": 1, "sim": {"dram": {"channels": 0}}})") == "sim.dram.channels");
  CHECK(error_path(R"({"seed": 1, "sim": {"scoreboard_capacity": 0}})") == "sim.scoreboard_capacity");
  CHECK(error_path(R"({"seed": 1, "sim": {"mode": "fast"}})") == "sim.mode");
  CHECK(error_path(R"({"seed": 1, "sim": {"colour": 1}})") == "sim.colour");
  CHECK(error_path(R"({"seed": 1, "workload": {"bits": 6}})") == "workload.bits");
  CHECK(error_path(R"({"seed": 1, "workload": {"seq_len": -4}})") == "workload.seq_len");
  CHECK(error_path(R"({"seed": 1, "sweep": {"alphas": [0.2, 2.0]}})") == "sweep.alphas[1]");
  CHECK(error_path(R"({"seed": 1, "sweep": {"alphas": []}})") == "sweep.alphas");
  CHECK(error_path(R"({"seed": 1, "repetitions": 0})") == "repetitions");
  CHECK(error_path(R"({"seed": 1,)") == "<root>");
  CHECK(error_path(R"([1])") == "<root>");
}

TEST_CASE("canonical dump parses back to the same dump") {
  const auto c = parse_run_config(
      R"({"seed": 9, "workload": {"generator": "locality", "boost": 4.5}, "sim": {"mode": "bs", "layout": "row_major"}})");
  const auto text = dump_run_config(c);
  CHECK(dump_run_config(parse_run_config(text)) == text);
  CHECK(parse_run_config(text).sim.mode == ComputeMode::BS);
}

TEST_CASE("missing file is a validation error naming --config") {
  try {
    load_run_config("/nonexistent/cfg.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "--config");
  }
}
