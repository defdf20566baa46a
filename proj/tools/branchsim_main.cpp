#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "branchsim/errors.hpp"
#include "branchsim/experiments.hpp"
#include "branchsim/runner.hpp"

namespace {

using nlohmann::json;

/// --param k=v; the value is parsed as JSON when possible, else kept as a
/// string ("chain=[\"z\",\"z\"]" and "theta_deg=60" both work).
json parse_param_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branchsim — branching-wavefunction quantum experiment runner"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "print the experiment registry");

  auto* run = app.add_subcommand("run", "run configured experiments and write reports");
  std::string config_path, out_dir, experiment;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  std::vector<std::string> param_args;
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seed", seed, "master seed (overrides config)")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--jobs", jobs, "max experiments run in parallel")->default_val(1);
  run->add_option("--experiment", experiment,
                  "run a single experiment by name (overrides the config list)");
  run->add_option("--param", param_args, "experiment parameter k=v (repeatable)");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    std::cout << branchsim::list_experiments_text();
    return 0;
  }

  try {
    branchsim::RunConfig cfg;
    if (!config_path.empty()) cfg = branchsim::load_config_file(config_path);

    if (!experiment.empty()) {
      branchsim::ExperimentEntry entry;
      entry.name = experiment;
      entry.label = experiment;
      for (const auto& kv : param_args) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
          throw branchsim::ConfigError("--param expects k=v, got '" + kv + "'");
        entry.params[kv.substr(0, eq)] = parse_param_value(kv.substr(eq + 1));
      }
      cfg.experiments = {entry};
    } else if (!param_args.empty()) {
      throw branchsim::ConfigError("--param requires --experiment");
    }

    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed_set) {
      cfg.master_seed = seed;
      cfg.has_master_seed = true;
    }
    if (!cfg.has_master_seed)
      throw branchsim::ConfigError(
          "'master_seed' is required (set it in the config or pass --seed)");

    return branchsim::run_batch(cfg, jobs, std::cerr);
  } catch (const branchsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return branchsim::exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return branchsim::exit_runtime_error;
  }
}
