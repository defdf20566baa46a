#ifndef BRANCHSIM_REPORT_HPP
#define BRANCHSIM_REPORT_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace branchsim {

/// Structured result of one experiment run: scalars, arrays and pass/fail
/// verdicts, plus an echo of the physical configuration. Serialization is
/// byte-deterministic: keys are sorted and numbers are emitted by the JSON
/// library's shortest-round-trip formatter, so identical runs give identical
/// bytes.
struct ExperimentReport {
  std::string name;
  std::map<std::string, nlohmann::json> params;
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> arrays;
  std::map<std::string, bool> verdicts;

  bool all_pass() const {
    for (const auto& [k, v] : verdicts)
      if (!v) return false;
    return true;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["params"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : params) j["params"][k] = v;
    j["scalars"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : scalars) j["scalars"][k] = v;
    j["arrays"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : arrays) j["arrays"][k] = v;
    j["verdicts"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : verdicts) j["verdicts"][k] = v;
    return j;
  }

  std::string to_json_string() const { return to_json().dump(2) + "\n"; }
};

}  // namespace branchsim

#endif  // BRANCHSIM_REPORT_HPP
