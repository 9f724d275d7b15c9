#include "conic/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("CONICGEO_OUT_DIR");
  return env && *env ? env : "out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conicgeo: distances, geodesics and embedding diagnostics on conic singular spaces"};
  app.require_subcommand(1);

  std::string input;
  conic::ScenarioOptions opts;
  opts.out_dir = default_out_dir();

  CLI::App* run = app.add_subcommand("run", "Run a scenario file or a bundled scenario by name");
  run->add_option("scenario", input, "Scenario JSON file, or the name of a bundled scenario")
      ->required();
  run->add_option("--out-dir", opts.out_dir,
                  "Output directory (default: $CONICGEO_OUT_DIR or ./out)");
  run->add_option("--seed", opts.seed, "Override the scenario seed (0 keeps the file's seed)");
  run->add_option("--threads", opts.threads, "Worker threads for batch tasks")
      ->check(CLI::PositiveNumber);
  run->add_flag("--verbose", opts.verbose, "Print per-task progress to stderr");

  bool as_json = false;
  CLI::App* list = app.add_subcommand("list-examples", "List the bundled scenarios");
  list->add_flag("--json", as_json, "Machine-readable output");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    if (as_json) {
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (const auto& s : conic::bundled_scenarios())
        out.push_back({{"name", s.name}, {"description", s.description}});
      std::printf("%s\n", out.dump(2).c_str());
    } else {
      for (const auto& s : conic::bundled_scenarios())
        std::printf("%-20s %s\n", s.name.c_str(), s.description.c_str());
    }
    return 0;
  }

  try {
    conic::ScenarioResult result;
    if (const auto* bundled = conic::find_bundled(input)) {
      result = conic::run_scenario_text(bundled->text, opts);
    } else if (std::filesystem::exists(input)) {
      result = conic::run_scenario_file(input, opts);
    } else {
      std::fprintf(stderr, "error: '%s' is neither a file nor a bundled scenario\n",
                   input.c_str());
      std::fprintf(stderr, "bundled scenarios:\n");
      for (const auto& s : conic::bundled_scenarios())
        std::fprintf(stderr, "  %s\n", s.name.c_str());
      return 2;
    }

    int failed = 0;
    for (const auto& t : result.tasks) {
      std::printf("%-6s %s (%s)\n", t.ok ? "ok" : "FAIL", t.task.c_str(), t.kind.c_str());
      for (const auto& v : t.violations) std::printf("       %s\n", v.c_str());
      if (!t.ok) ++failed;
    }
    std::printf("%s: %zu task(s), %d failed; summary at %s\n", result.name.c_str(),
                result.tasks.size(), failed, result.summary_path.c_str());
    return result.ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
