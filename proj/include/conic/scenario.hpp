#pragma once

#include "conic/lne.hpp"
#include "conic/quotient.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace conic {

// Scenario runner: JSON description in, CSV tables + a summary JSON out.
// Bundled scenarios are compiled into the library so the CLI works without
// any data files.

struct ScenarioOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 0;   // 0: use the scenario's own seed
  int threads = 1;
  bool verbose = false;
  std::string base_dir;     // resolves relative mesh paths in the config
};

struct TaskOutcome {
  std::string task;
  std::string kind;
  bool ok = true;
  std::vector<std::string> violations;  // human-readable, names the offending pair
  std::map<std::string, double> stats;
  std::vector<std::string> files;       // outputs written, relative to out_dir
};

struct ScenarioResult {
  std::string name;
  std::uint64_t seed = 0;
  bool ok = true;
  std::vector<TaskOutcome> tasks;
  std::string summary_path;
};

// Parses and runs a scenario from JSON text. Throws std::runtime_error with a
// located message on malformed input; invariant violations do not throw, they
// mark the result not-ok.
ScenarioResult run_scenario_text(const std::string& json_text, const ScenarioOptions& opts);
ScenarioResult run_scenario_file(const std::string& path, const ScenarioOptions& opts);

struct BundledScenario {
  std::string name;
  std::string description;
  const char* text;
};

const std::vector<BundledScenario>& bundled_scenarios();
const BundledScenario* find_bundled(const std::string& name);

// Fixed-format floating point rendering used by every emitter, so outputs are
// byte-identical across runs and platforms.
std::string format_double(double v);

}  // namespace conic
