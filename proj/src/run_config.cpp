#include "pade/run_config.hpp"

#include <cmath>
#include <concepts>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pade {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads one JSON object, tracking which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <std::unsigned_integral T>
  void field(const std::string& key, T& out) {
    unsigned_field(key, out);
  }

  void field(const std::string& key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(join(path_, key), "must be an integer");
      out = v->get<int>();
    }
  }

  void field(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(join(path_, key), "must be a number");
      out = v->get<double>();
    }
  }

  void field(const std::string& key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(join(path_, key), "must be an array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) {
          throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "must be a number");
        }
        out.push_back((*v)[i].get<double>());
      }
    }
  }

  template <typename E>
  void enum_field(const std::string& key, E& out, E (*parse)(const std::string&)) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(join(path_, key), "must be a string");
      try {
        out = parse(v->get<std::string>());
      } catch (const std::invalid_argument&) {
        throw ConfigError(join(path_, key), "unknown value '" + v->get<std::string>() + "'");
      }
    }
  }

  void child(const std::string& key, const std::function<void(Reader&)>& fn) {
    if (const json* v = take(key)) {
      Reader r(*v, join(path_, key));
      fn(r);
      r.finish();
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (used_.count(key) == 0) throw ConfigError(join(path_, key), "unknown field");
    }
  }

 private:
  const json* take(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void unsigned_field(const std::string& key, T& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
        throw ConfigError(join(path_, key), "must be a non-negative integer");
      }
      const auto raw = v->get<std::uint64_t>();
      if (raw > std::numeric_limits<T>::max()) throw ConfigError(join(path_, key), "out of range");
      out = static_cast<T>(raw);
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Re-raises a sub-validator message "field: why" under `prefix`.
[[noreturn]] void rethrow_with_prefix(const std::invalid_argument& e, const std::string& prefix) {
  const std::string msg = e.what();
  const auto colon = msg.find(": ");
  if (colon == std::string::npos) throw ConfigError(prefix, msg);
  std::string path = msg.substr(0, colon);
  if (path.rfind(prefix + ".", 0) != 0) path = prefix + "." + path;
  throw ConfigError(path, msg.substr(colon + 2));
}

}  // namespace

void RunConfig::validate() const {
  if (repetitions == 0) throw ConfigError("repetitions", "must be at least 1");
  try {
    workload.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_with_prefix(e, "workload");
  }
  if (!(prune.alpha >= 0.0 && prune.alpha <= 1.0)) throw ConfigError("prune.alpha", "must be within [0, 1]");
  if (!(prune.radius > 0.0) || !std::isfinite(prune.radius)) {
    throw ConfigError("prune.radius", "must be positive and finite");
  }
  try {
    sim.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_with_prefix(e, "sim");
  }
  const std::size_t plane_bytes = workload.head_dim / 8;
  if (plane_bytes > sim.dram.bytes_per_transaction || sim.dram.bytes_per_transaction % plane_bytes != 0) {
    throw ConfigError("workload.head_dim", "one bit plane (head_dim / 8 bytes) must evenly divide a DRAM transaction");
  }
  if (sweep_alphas.empty()) throw ConfigError("sweep.alphas", "must not be empty");
  for (std::size_t i = 0; i < sweep_alphas.size(); ++i) {
    if (!(sweep_alphas[i] >= 0.0 && sweep_alphas[i] <= 1.0)) {
      throw ConfigError("sweep.alphas[" + std::to_string(i) + "]", "must be within [0, 1]");
    }
  }
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader root(j, "");
  if (!root.has("seed")) throw ConfigError("seed", "required (no implicit entropy)");
  root.field("seed", c.seed);
  root.field("repetitions", c.repetitions);
  root.field("threads", c.threads);
  root.child("workload", [&](Reader& r) {
    auto& w = c.workload;
    r.enum_field("generator", w.generator, &parse_generator);
    r.enum_field("phase", w.phase, &parse_phase);
    r.field("seq_len", w.seq_len);
    r.field("head_dim", w.head_dim);
    r.field("num_queries", w.num_queries);
    r.field("num_heads", w.num_heads);
    r.field("bits", w.bits);
    r.field("dominant", w.dominant);
    r.field("margin", w.margin);
    r.field("head_frac", w.head_frac);
    r.field("tail_frac", w.tail_frac);
    r.field("boost", w.boost);
  });
  root.child("prune", [&](Reader& r) {
    r.field("alpha", c.prune.alpha);
    r.field("radius", c.prune.radius);
  });
  root.child("sim", [&](Reader& r) {
    auto& s = c.sim;
    r.field("rows", s.rows);
    r.field("lanes_per_row", s.lanes_per_row);
    r.field("scoreboard_capacity", s.scoreboard_capacity);
    r.field("group_size", s.group_size);
    r.enum_field("mode", s.mode, &parse_compute_mode);
    r.enum_field("layout", s.layout, &parse_layout);
    r.field("tile_size", s.tile_size);
    r.enum_field("tile_order", s.tile_order, &parse_tile_order);
    r.field("v_capacity", s.v_capacity);
    r.field("k_buffer_bytes", s.k_buffer_bytes);
    r.field("sram_latency", s.sram_latency);
    r.field("rescale_cycles", s.rescale_cycles);
    r.child("dram", [&](Reader& d) {
      d.field("latency_cycles", s.dram.latency_cycles);
      d.field("channels", s.dram.channels);
      d.field("banks_per_channel", s.dram.banks_per_channel);
      d.field("row_bytes", s.dram.row_bytes);
      d.field("bytes_per_transaction", s.dram.bytes_per_transaction);
      d.field("max_outstanding", s.dram.max_outstanding);
      d.field("activation_penalty", s.dram.activation_penalty);
      d.field("issue_interval", s.dram.issue_interval);
      d.field("scheduling_window", s.dram.scheduling_window);
    });
    r.child("energy", [&](Reader& e) {
      e.field("dram_pj_per_bit", s.energy.dram_pj_per_bit);
      e.field("sram_pj_per_access", s.energy.sram_pj_per_access);
      e.field("pe_pj_per_cycle", s.energy.pe_pj_per_cycle);
    });
  });
  root.child("sweep", [&](Reader& r) { r.field("alphas", c.sweep_alphas); });
  root.finish();
  c.prune.bits = c.workload.bits;
  c.workload.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["repetitions"] = c.repetitions;
  j["threads"] = c.threads;
  const auto& w = c.workload;
  j["workload"] = ordered_json{{"generator", to_string(w.generator)},
                               {"phase", to_string(w.phase)},
                               {"seq_len", w.seq_len},
                               {"head_dim", w.head_dim},
                               {"num_queries", w.num_queries},
                               {"num_heads", w.num_heads},
                               {"bits", w.bits},
                               {"dominant", w.dominant},
                               {"margin", w.margin},
                               {"head_frac", w.head_frac},
                               {"tail_frac", w.tail_frac},
                               {"boost", w.boost}};
  j["prune"] = ordered_json{{"alpha", c.prune.alpha}, {"radius", c.prune.radius}};
  const auto& s = c.sim;
  j["sim"] = ordered_json{{"rows", s.rows},
                          {"lanes_per_row", s.lanes_per_row},
                          {"scoreboard_capacity", s.scoreboard_capacity},
                          {"group_size", s.group_size},
                          {"mode", to_string(s.mode)},
                          {"layout", to_string(s.layout)},
                          {"tile_size", s.tile_size},
                          {"tile_order", to_string(s.tile_order)},
                          {"v_capacity", s.v_capacity},
                          {"k_buffer_bytes", s.k_buffer_bytes},
                          {"sram_latency", s.sram_latency},
                          {"rescale_cycles", s.rescale_cycles},
                          {"dram",
                           ordered_json{{"latency_cycles", s.dram.latency_cycles},
                                        {"channels", s.dram.channels},
                                        {"banks_per_channel", s.dram.banks_per_channel},
                                        {"row_bytes", s.dram.row_bytes},
                                        {"bytes_per_transaction", s.dram.bytes_per_transaction},
                                        {"max_outstanding", s.dram.max_outstanding},
                                        {"activation_penalty", s.dram.activation_penalty},
                                        {"issue_interval", s.dram.issue_interval},
                                        {"scheduling_window", s.dram.scheduling_window}}},
                          {"energy",
                           ordered_json{{"dram_pj_per_bit", s.energy.dram_pj_per_bit},
                                        {"sram_pj_per_access", s.energy.sram_pj_per_access},
                                        {"pe_pj_per_cycle", s.energy.pe_pj_per_cycle}}}};
  j["sweep"] = ordered_json{{"alphas", c.sweep_alphas}};
  return j.dump(2);
}

}  // namespace pade
