#pragma once

// Experiment orchestration: configuration files, the scenario registry,
// per-seed parallel execution, CSV/JSON persistence and acceptance checks.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace spo::harness {

struct ExperimentConfig {
  std::string scenario;
  std::string environment;  // empty selects the scenario default
  std::string algorithm;    // informational; fixed by the scenario
  std::optional<double> eta, gamma, alpha, rho, tau;
  std::optional<std::size_t> B, k, T;
  /// Run indices; run i uses derive_seed(masterSeed, i).
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> masterSeed;
  std::filesystem::path output;  // empty selects "results"
  std::size_t jobs = 0;  // 0 selects default_jobs()
  bool recordWallTime = false;
  /// Scenario-specific keys such as weights or noise level.
  std::map<std::string, std::string> params;

  /// Throws std::invalid_argument on unknown scenarios or empty seed lists.
  void validate() const;
  std::string param(const std::string& key, const std::string& fallback) const;
  double param_double(const std::string& key, double fallback) const;
};

/// "0-9" or "0,3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// INI file: top-level `scenario`, sections [environment], [learner], [run]
/// and [params]. See README for the key list.
ExperimentConfig load_config(const std::filesystem::path& file);
ExperimentConfig parse_config(const std::string& text);

/// SPO_LAB_JOBS if set and positive, else the hardware concurrency.
std::size_t default_jobs();

/// One CSV row. Undefined metrics are written as empty cells.
struct RunRecord {
  std::size_t runId = 0;
  std::uint64_t seed = 0;
  std::size_t t = 0;
  std::string digest;
  std::optional<double> exploitability, l1ToMw, regret, groundTruthReturn;
  std::size_t queries = 0;
  std::optional<double> wallTime;
};

inline constexpr const char* kCsvHeader =
    "run_id,seed,t,digest,exploitability,l1_to_mw,realized_regret,ground_truth_return,queries,wall_time";

/// Floats with 17 significant digits.
std::string format_double(double v);
std::string csv_row(const RunRecord& r);

/// Output of one run: streamed records plus terminal metrics.
struct RunResult {
  std::size_t runId = 0;
  std::uint64_t seed = 0;
  std::vector<RunRecord> records;
  std::map<std::string, double> metrics;
  /// Extra files to write next to the run CSV (name -> content).
  std::map<std::string, std::string> artifacts;
};

struct MetricSummary {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample stddev / sqrt(n); 0 for one run
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

std::map<std::string, MetricSummary> summarize(const std::vector<RunResult>& runs);
nlohmann::json summary_json(const std::string& scenario, const std::map<std::string, MetricSummary>& summary);

enum class Aggregate { Mean, Min, Max };
enum class Compare { LessEqual, GreaterEqual, Greater };

/// Acceptance check on an aggregated terminal metric.
struct Check {
  std::string metric;
  Aggregate aggregate = Aggregate::Mean;
  Compare compare = Compare::LessEqual;
  double threshold = 0.0;

  std::string describe() const;
};

struct CheckResult {
  Check check;
  double observed = 0.0;
  bool passed = false;
};

std::vector<CheckResult> evaluate_checks(const std::vector<Check>& checks, const std::map<std::string, MetricSummary>& summary);

using RunFn = std::function<RunResult(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId)>;

struct Scenario {
  std::string id;
  std::string algorithm;
  std::string description;
  /// Deterministic scenarios run once, ignoring the seed list.
  bool seedless = false;
  ExperimentConfig defaults;
  std::vector<Check> checks;
  RunFn run;
};

/// All built-in scenarios, in a stable order.
const std::vector<Scenario>& scenarios();
const Scenario& find_scenario(const std::string& id);

/// Defaults of the scenario overlaid with every field set in `overrides`.
ExperimentConfig merge_with_defaults(const ExperimentConfig& overrides);

struct ExperimentOutcome {
  std::vector<RunResult> runs;
  std::map<std::string, MetricSummary> summary;
  std::vector<CheckResult> checks;
  bool passed = false;
  /// Files written, relative to the output directory.
  std::vector<std::filesystem::path> files;
};

/// Runs every seed on a bounded worker pool, writes
/// <output>/<scenario>/run_<i>.csv and summary.json, and evaluates the checks.
/// Run failures are rethrown with the scenario and seed attached.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

}  // namespace spo::harness
