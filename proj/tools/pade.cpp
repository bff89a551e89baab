// pade: run, sweep, ablate and export-trace over one JSON config.
//
// Exit codes: 0 ok, 1 internal error, 2 validation error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pade/report.hpp"
#include "pade/run_config.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kValidation = 2;

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string format = "json";
};

pade::RunConfig load(const Options& opt) {
  std::ifstream in(opt.config);
  if (!in) throw pade::ConfigError("--config", "cannot open '" + opt.config + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (opt.seed) {
    // Injected before parsing so the override is validated like any other field.
    auto j = nlohmann::ordered_json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
      j["seed"] = *opt.seed;
      text = j.dump();
    }
  }
  return pade::parse_run_config(text);
}

void write(const Options& opt, const std::string& stem, const std::string& body) {
  fs::create_directories(opt.out);
  const fs::path path = fs::path(opt.out) / (stem + "." + opt.format);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << body;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
  std::cout << path.string() << '\n';
}

bool csv(const Options& opt) { return opt.format == "csv"; }

void cmd_run(const Options& opt) {
  const auto cfg = load(opt);
  const auto records = pade::run_repetitions(cfg);
  write(opt, "report", csv(opt) ? pade::run_report_csv(records) : pade::run_report_json(cfg, records));
}

void cmd_sweep(const Options& opt) {
  const auto cfg = load(opt);
  const auto rows = pade::run_sweep(cfg);
  write(opt, "sweep", csv(opt) ? pade::sweep_report_csv(rows) : pade::sweep_report_json(cfg, rows));
}

void cmd_ablate(const Options& opt) {
  const auto cfg = load(opt);
  const auto rows = pade::run_ablation(cfg);
  write(opt, "ablate", csv(opt) ? pade::ablate_report_csv(rows) : pade::ablate_report_json(cfg, rows));
}

void cmd_export_trace(const Options& opt) {
  auto cfg = load(opt);
  cfg.sim.record_trace = true;
  auto spec = cfg.workload;
  spec.seed = cfg.seed;
  const auto workload = pade::generate_workload(spec);
  const auto result = pade::run(workload, cfg.sim, cfg.prune);
  std::string body;
  if (csv(opt)) {
    body = "cycle,lane,key,plane,action\n";
    for (const auto& e : result.trace) {
      body += std::to_string(e.cycle) + "," + std::to_string(e.lane) + "," + std::to_string(e.key) + "," +
              std::to_string(e.plane) + "," + pade::to_string(e.action) + "\n";
    }
    write(opt, "trace", body);
  } else {
    Options jsonl = opt;
    jsonl.format = "jsonl";
    write(jsonl, "trace", pade::trace_jsonl(result.trace));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PADE bit-serial sparse attention simulator"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration")->required();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--format", opt.format, "report encoding")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
  };
  auto* run = app.add_subcommand("run", "simulate one configuration");
  auto* sweep = app.add_subcommand("sweep", "alpha sweep, one row per grid point");
  auto* ablate = app.add_subcommand("ablate", "cumulative feature ablation");
  auto* trace = app.add_subcommand("export-trace", "per-event lane trace of one run");
  for (auto* s : {run, sweep, ablate, trace}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  for (auto* s : {run, sweep, ablate, trace}) {
    if (s->parsed() && s->count("--seed") > 0) opt.seed = seed;
  }

  try {
    if (run->parsed()) cmd_run(opt);
    if (sweep->parsed()) cmd_sweep(opt);
    if (ablate->parsed()) cmd_ablate(opt);
    if (trace->parsed()) cmd_export_trace(opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
