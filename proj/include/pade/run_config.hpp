#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pade/buigf.hpp"
#include "pade/reference.hpp"
#include "pade/sim.hpp"

namespace pade {

/// Validation failure carrying the flat field path (e.g. "prune.alpha").
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string path, const std::string& why)
      : std::invalid_argument(path + ": " + why), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;  // repetition r runs with seed + r
  std::size_t threads = 0;      // sweep workers; 0 = hardware concurrency
  WorkloadSpec workload;
  PruneConfig prune;
  SimConfig sim;
  std::vector<double> sweep_alphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  /// Throws ConfigError.
  void validate() const;
};

/// Parses the JSON config. `seed` is mandatory; every other field defaults.
/// Unknown fields and type mismatches raise ConfigError with the field path.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON echo of a config (every field, fixed order).
std::string dump_run_config(const RunConfig& cfg);

}  // namespace pade
