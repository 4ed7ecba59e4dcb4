// spo-lab: run, verify and list experiment scenarios; solve preference games.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spo/game_solve.hpp"
#include "spo/harness.hpp"
#include "spo/pref_core.hpp"

namespace {

using namespace spo;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out;
  std::size_t jobs = 0;
  bool wallTime = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--seeds", o.seeds, "Run indices, e.g. 0-9 or 0,3,7");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--jobs", o.jobs, "Worker threads (default: SPO_LAB_JOBS or core count)");
  cmd->add_flag("--wall-time", o.wallTime, "Record wall-clock time in the CSV");
}

void apply(const Overrides& o, harness::ExperimentConfig& cfg) {
  if (o.seed) cfg.masterSeed = o.seed;
  if (!o.seeds.empty()) cfg.seeds = harness::parse_seed_list(o.seeds);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.jobs) cfg.jobs = o.jobs;
  if (o.wallTime) cfg.recordWallTime = true;
}

int report(const harness::ExperimentConfig& cfg) {
  const auto outcome = harness::run_experiment(cfg);
  for (const auto& [name, s] : outcome.summary)
    std::printf("  %-26s mean %-12.6g stderr %-12.6g min %-12.6g max %-12.6g n %zu\n", name.c_str(), s.mean, s.stderr_,
                s.min, s.max, s.n);
  for (const auto& c : outcome.checks)
    std::printf("  %s %s (observed %.6g)\n", c.passed ? "PASS" : "FAIL", c.check.describe().c_str(), c.observed);
  std::printf("%s: %s\n", cfg.scenario.c_str(), outcome.passed ? "PASS" : "FAIL");
  return outcome.passed ? 0 : 1;
}

/// JSON {"n": .., "entries": [[..]]} or whitespace-separated rows.
pref::PreferenceMatrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return pref::PreferenceMatrix::from_json(nlohmann::json::parse(text));
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::vector<double> row;
    for (double v; cells >> v;) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return pref::PreferenceMatrix(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-play preference optimization experiments"};
  app.require_subcommand(1);

  std::string configPath;
  Overrides runOverrides;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", configPath, "INI config file")->required()->check(CLI::ExistingFile);
  add_overrides(run, runOverrides);

  app.add_subcommand("list-scenarios", "List the built-in scenarios");

  std::string scenarioId;
  Overrides verifyOverrides;
  auto* verify = app.add_subcommand("verify", "Run a scenario with its defaults and evaluate its acceptance checks");
  verify->add_option("scenario", scenarioId, "Scenario id")->required();
  add_overrides(verify, verifyOverrides);

  std::string matrixPath;
  auto* solve = app.add_subcommand("solve", "Exact minimax winner of a preference matrix");
  solve->add_option("--matrix", matrixPath, "Matrix file (JSON or whitespace rows)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = harness::load_config(configPath);
      apply(runOverrides, cfg);
      return report(cfg);
    }
    if (app.got_subcommand("list-scenarios")) {
      for (const auto& s : harness::scenarios()) {
        std::printf("%-24s %-15s %s\n", s.id.c_str(), s.algorithm.c_str(), s.description.c_str());
        for (const auto& c : s.checks) std::printf("%-24s %-15s   check: %s\n", "", "", c.describe().c_str());
      }
      return 0;
    }
    if (*verify) {
      harness::ExperimentConfig cfg;
      cfg.scenario = scenarioId;
      apply(verifyOverrides, cfg);
      return report(cfg);
    }
    if (*solve) {
      const auto m = read_matrix(matrixPath);
      const auto sol = game::exact_minimax_winner(m);
      nlohmann::json doc = sol.to_json();
      doc["copeland_winners"] = game::copeland_winners(m);
      std::cout << doc.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "spo-lab: %s\n", e.what());
    return 2;
  }
  return 0;
}
