#include "branchsim/runner.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "branchsim/errors.hpp"
#include "branchsim/rng.hpp"

namespace branchsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t parse_seed(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError("'" + key + "' must be a nonnegative integer");
}

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  RunConfig cfg;

  for (const auto& [key, val] : doc.items()) {
    if (key == "master_seed") {
      cfg.master_seed = parse_seed(val, "master_seed");
      cfg.has_master_seed = true;
    } else if (key == "output_dir") {
      if (!val.is_string()) throw ConfigError("'output_dir' must be a string");
      cfg.output_dir = val.get<std::string>();
    } else if (key == "constants") {
      if (!val.is_object()) throw ConfigError("'constants' must be an object");
      for (const auto& [ck, cv] : val.items()) {
        if (ck == "hbar") {
          if (!cv.is_number() || !(cv.get<double>() > 0))
            throw ConfigError("'constants.hbar' must be a positive number");
          cfg.hbar = cv.get<double>();
        } else {
          throw ConfigError("unknown key 'constants." + ck + "'");
        }
      }
    } else if (key == "experiments") {
      if (!val.is_array()) throw ConfigError("'experiments' must be an array");
      for (const auto& e : val) {
        if (!e.is_object()) throw ConfigError("'experiments' entries must be objects");
        ExperimentEntry entry;
        for (const auto& [ek, ev] : e.items()) {
          if (ek == "name") {
            if (!ev.is_string()) throw ConfigError("experiment 'name' must be a string");
            entry.name = ev.get<std::string>();
          } else if (ek == "params") {
            if (!ev.is_object()) throw ConfigError("experiment 'params' must be an object");
            entry.params = ev;
          } else if (ek == "n_runs") {
            if (!ev.is_number_integer() || ev.get<long>() < 0)
              throw ConfigError("experiment 'n_runs' must be a nonnegative integer");
            entry.n_runs = ev.get<long>();
          } else if (ek == "seed") {
            entry.seed = parse_seed(ev, "seed");
          } else if (ek == "label") {
            if (!ev.is_string()) throw ConfigError("experiment 'label' must be a string");
            entry.label = ev.get<std::string>();
          } else {
            throw ConfigError("unknown experiment key '" + ek + "'");
          }
        }
        if (entry.name.empty()) throw ConfigError("experiment entry is missing 'name'");
        entry.label = entry.label.empty() ? entry.name : entry.label;
        cfg.experiments.push_back(std::move(entry));
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  // validate names and labels up front, before anything runs
  std::map<std::string, int> label_uses;
  for (auto& e : cfg.experiments) {
    if (!find_experiment(e.name))
      throw ConfigError("unknown experiment name '" + e.name + "'");
    const int uses = label_uses[e.label]++;
    if (uses > 0) e.label += "_" + std::to_string(uses + 1);
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::size_t index) {
  Philox rng(master_seed, 0x5eed0000ULL + index);
  return rng.next_u64();
}

namespace {

struct JobResult {
  ExperimentReport report;
  std::exception_ptr error;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimulationError("cannot write '" + path.string() + "'");
  out << content;
}

std::string pattern_csv(const ExperimentReport& r) {
  const auto& centers = r.arrays.at("bin_center_m");
  const auto& inten = r.arrays.at("intensity");
  std::string out = "bin_center_m,intensity\n";
  char buf[80];
  for (std::size_t i = 0; i < centers.size() && i < inten.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", centers[i], inten[i]);
    out += buf;
  }
  return out;
}

}  // namespace

int run_batch(const RunConfig& config, int jobs, std::ostream& log) {
  if (!config.has_master_seed) {
    log << "config error: 'master_seed' is required (no wall-clock default)\n";
    return exit_config_error;
  }
  if (config.experiments.empty()) {
    log << "config error: 'experiments' lists nothing to run\n";
    return exit_config_error;
  }
  if (jobs < 1) jobs = 1;

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    log << "config error: cannot create output_dir '" << config.output_dir
        << "': " << ec.message() << "\n";
    return exit_config_error;
  }

  const std::size_t n = config.experiments.size();
  std::vector<JobResult> results(n);
  std::atomic<std::size_t> cursor{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      const ExperimentEntry& e = config.experiments[i];
      RunContext ctx;
      ctx.seed = e.seed.value_or(derive_seed(config.master_seed, i));
      ctx.n_runs = e.n_runs;
      ctx.hbar = config.hbar;
      try {
        results[i].report = run_experiment(e.name, e.params, ctx);
      } catch (...) {
        results[i].error = std::current_exception();
      }
    }
  };

  if (jobs == 1 || n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int nthreads = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(jobs)));
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // surface the first failure in config order, so errors are deterministic
  for (std::size_t i = 0; i < n; ++i) {
    if (!results[i].error) continue;
    try {
      std::rethrow_exception(results[i].error);
    } catch (const ConfigError& e) {
      log << "config error in '" << config.experiments[i].label << "': " << e.what() << "\n";
      return exit_config_error;
    } catch (const std::exception& e) {
      log << "runtime error in '" << config.experiments[i].label << "': " << e.what() << "\n";
      return exit_runtime_error;
    }
  }

  nlohmann::ordered_json summary;
  summary["master_seed"] = config.master_seed;
  summary["hbar"] = config.hbar;
  summary["experiments"] = nlohmann::ordered_json::array();

  bool all_pass = true;
  std::size_t verdict_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const ExperimentEntry& e = config.experiments[i];
    const ExperimentReport& rep = results[i].report;

    write_file(fs::path(config.output_dir) / (e.label + ".json"), rep.to_json_string());
    if (rep.arrays.count("bin_center_m") && rep.arrays.count("intensity"))
      write_file(fs::path(config.output_dir) / (e.label + ".csv"), pattern_csv(rep));

    nlohmann::ordered_json entry;
    entry["label"] = e.label;
    entry["name"] = rep.name;
    entry["verdicts"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rep.verdicts) {
      entry["verdicts"][k] = v;
      ++verdict_count;
      if (!v) all_pass = false;
    }
    entry["pass"] = rep.all_pass();
    summary["experiments"].push_back(std::move(entry));

    log << (rep.all_pass() ? "pass" : "FAIL") << "  " << e.label << "\n";
  }
  summary["verdict_count"] = verdict_count;
  summary["all_pass"] = all_pass;
  write_file(fs::path(config.output_dir) / "summary.json", summary.dump(2) + "\n");

  return all_pass ? exit_ok : exit_verdict_failure;
}

}  // namespace branchsim
