#ifndef BRANCHSIM_RUNNER_HPP
#define BRANCHSIM_RUNNER_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "branchsim/constants.hpp"
#include "branchsim/experiments.hpp"

namespace branchsim {

/// One configured experiment run.
struct ExperimentEntry {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  long n_runs = 0;                    // 0 = experiment default
  std::optional<std::uint64_t> seed;  // absent = derived from master seed
  std::string label;                  // output file stem; defaults to name
};

/// Validated batch configuration. The master seed is mandatory: there is no
/// wall-clock fallback, so every published number can be re-derived.
struct RunConfig {
  std::vector<ExperimentEntry> experiments;
  std::string output_dir = "out";
  std::uint64_t master_seed = 0;
  bool has_master_seed = false;
  double hbar = constants::hbar_si;
};

/// Parse and validate a configuration document; throws ConfigError naming
/// the offending key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);

/// Seed for experiment `index` when no explicit per-entry seed is given.
std::uint64_t derive_seed(std::uint64_t master_seed, std::size_t index);

/// Exit codes of run_batch.
inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime_error = 1;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_verdict_failure = 3;

/// Run every configured experiment (up to `jobs` in parallel), write one
/// report per entry (<label>.json, plus <label>.csv when the report carries
/// a screen pattern) and a summary.json with all verdicts. Output bytes are
/// a pure function of (config, master seed), independent of `jobs`.
int run_batch(const RunConfig& config, int jobs, std::ostream& log);

}  // namespace branchsim

#endif  // BRANCHSIM_RUNNER_HPP
