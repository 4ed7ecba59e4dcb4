#include "spo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "spo/rng.hpp"

namespace spo::harness {

namespace pt = boost::property_tree;

void ExperimentConfig::validate() const {
  find_scenario(scenario);
  if (seeds.empty()) throw std::invalid_argument("config: seed list is empty");
  if (T && *T == 0) throw std::invalid_argument("config: T must be positive");
}

std::string ExperimentConfig::param(const std::string& key, const std::string& fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double ExperimentConfig::param_double(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::size_t used = 0;
  const double v = std::stod(it->second, &used);
  if (used != it->second.size()) throw std::invalid_argument("config: param " + key + " is not a number");
  return v;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(std::stoull(item));
    } else {
      const auto lo = std::stoull(item.substr(0, dash));
      const auto hi = std::stoull(item.substr(dash + 1));
      if (hi < lo) throw std::invalid_argument("seed range " + item + " is empty");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
  }
  return out;
}

namespace {

template <class T>
std::optional<T> get_opt(const pt::ptree& tree, const std::string& path) {
  if (auto v = tree.get_optional<T>(path)) return *v;
  return std::nullopt;
}

ExperimentConfig from_tree(const pt::ptree& tree) {
  ExperimentConfig cfg;
  cfg.scenario = tree.get<std::string>("scenario");
  cfg.environment = tree.get<std::string>("environment.id", "");
  cfg.algorithm = tree.get<std::string>("algorithm", "");
  cfg.eta = get_opt<double>(tree, "learner.eta");
  cfg.gamma = get_opt<double>(tree, "learner.gamma");
  cfg.alpha = get_opt<double>(tree, "learner.alpha");
  cfg.rho = get_opt<double>(tree, "learner.rho");
  cfg.tau = get_opt<double>(tree, "learner.tau");
  cfg.B = get_opt<std::size_t>(tree, "learner.B");
  cfg.k = get_opt<std::size_t>(tree, "learner.k");
  cfg.T = get_opt<std::size_t>(tree, "run.T");
  if (auto s = tree.get_optional<std::string>("run.seeds")) cfg.seeds = parse_seed_list(*s);
  cfg.masterSeed = get_opt<std::uint64_t>(tree, "run.master_seed");
  cfg.output = tree.get<std::string>("run.output", "");
  cfg.jobs = tree.get<std::size_t>("run.jobs", 0);
  cfg.recordWallTime = tree.get<bool>("run.wall_time", false);
  if (auto params = tree.get_child_optional("params"))
    for (const auto& [key, node] : *params) cfg.params[key] = node.get_value<std::string>();
  return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& file) {
  pt::ptree tree;
  pt::read_ini(file.string(), tree);
  return from_tree(tree);
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  pt::read_ini(in, tree);
  return from_tree(tree);
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("SPO_LAB_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_row(const RunRecord& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream out;
  out << r.runId << ',' << r.seed << ',' << r.t << ',' << r.digest << ',' << opt(r.exploitability) << ',' << opt(r.l1ToMw)
      << ',' << opt(r.regret) << ',' << opt(r.groundTruthReturn) << ',' << r.queries << ',' << opt(r.wallTime);
  return out.str();
}

std::map<std::string, MetricSummary> summarize(const std::vector<RunResult>& runs) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& run : runs)
    for (const auto& [name, v] : run.metrics) values[name].push_back(v);
  std::map<std::string, MetricSummary> out;
  for (const auto& [name, xs] : values) {
    MetricSummary s;
    s.n = xs.size();
    double total = 0.0;
    for (double x : xs) total += x;
    s.mean = total / static_cast<double>(s.n);
    if (s.n > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - s.mean) * (x - s.mean);
      s.stderr_ = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    }
    s.min = *std::min_element(xs.begin(), xs.end());
    s.max = *std::max_element(xs.begin(), xs.end());
    out[name] = s;
  }
  return out;
}

nlohmann::json summary_json(const std::string& scenario, const std::map<std::string, MetricSummary>& summary) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, s] : summary)
    metrics[name] = {{"mean", s.mean}, {"stderr", s.stderr_}, {"min", s.min}, {"max", s.max}, {"n", s.n}};
  return {{"scenario", scenario}, {"metrics", metrics}};
}

std::string Check::describe() const {
  const char* agg = aggregate == Aggregate::Mean ? "mean" : aggregate == Aggregate::Min ? "min" : "max";
  const char* op = compare == Compare::LessEqual ? "<=" : compare == Compare::GreaterEqual ? ">=" : ">";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", threshold);
  return std::string(agg) + "(" + metric + ") " + op + " " + buf;
}

std::vector<CheckResult> evaluate_checks(const std::vector<Check>& checks, const std::map<std::string, MetricSummary>& summary) {
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    CheckResult r{c, std::nan(""), false};
    const auto it = summary.find(c.metric);
    if (it != summary.end()) {
      const auto& s = it->second;
      r.observed = c.aggregate == Aggregate::Mean ? s.mean : c.aggregate == Aggregate::Min ? s.min : s.max;
      switch (c.compare) {
        case Compare::LessEqual: r.passed = r.observed <= c.threshold; break;
        case Compare::GreaterEqual: r.passed = r.observed >= c.threshold; break;
        case Compare::Greater: r.passed = r.observed > c.threshold; break;
      }
    }
    out.push_back(r);
  }
  return out;
}

const Scenario& find_scenario(const std::string& id) {
  for (const auto& s : scenarios())
    if (s.id == id) return s;
  throw std::invalid_argument("unknown scenario '" + id + "'");
}

ExperimentConfig merge_with_defaults(const ExperimentConfig& o) {
  ExperimentConfig cfg = find_scenario(o.scenario).defaults;
  cfg.scenario = o.scenario;
  if (!o.environment.empty()) cfg.environment = o.environment;
  for (auto [dst, src] : {std::pair{&cfg.eta, &o.eta}, {&cfg.gamma, &o.gamma}, {&cfg.alpha, &o.alpha}, {&cfg.rho, &o.rho}, {&cfg.tau, &o.tau}})
    if (*src) *dst = *src;
  for (auto [dst, src] : {std::pair{&cfg.B, &o.B}, {&cfg.k, &o.k}, {&cfg.T, &o.T}})
    if (*src) *dst = *src;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.masterSeed) cfg.masterSeed = o.masterSeed;
  if (!o.output.empty()) cfg.output = o.output;
  if (o.jobs) cfg.jobs = o.jobs;
  cfg.recordWallTime = cfg.recordWallTime || o.recordWallTime;
  for (const auto& [k, v] : o.params) cfg.params[k] = v;
  return cfg;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& overrides) {
  const ExperimentConfig cfg = merge_with_defaults(overrides);
  cfg.validate();
  const Scenario& scenario = find_scenario(cfg.scenario);
  const std::uint64_t master = cfg.masterSeed.value_or(0);

  std::vector<std::uint64_t> indices = cfg.seeds;
  if (scenario.seedless) indices = {0};
  const std::size_t n = indices.size();
  std::vector<RunResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const std::uint64_t seed = derive_seed(master, indices[i]);
      try {
        results[i] = scenario.run(cfg, seed, static_cast<std::size_t>(indices[i]));
        results[i].runId = static_cast<std::size_t>(indices[i]);
        results[i].seed = seed;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::min(n, cfg.jobs ? cfg.jobs : default_jobs());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("scenario " + cfg.scenario + ", run " + std::to_string(indices[i]) + ": " + e.what());
    }
  }

  ExperimentOutcome out;
  out.summary = summarize(results);
  out.checks = evaluate_checks(scenario.checks, out.summary);
  out.passed = std::all_of(out.checks.begin(), out.checks.end(), [](const CheckResult& c) { return c.passed; });

  const std::filesystem::path root = cfg.output.empty() ? std::filesystem::path("results") : cfg.output;
  const std::filesystem::path dir = root / cfg.scenario;
  std::filesystem::create_directories(dir);
  for (const auto& run : results) {
    std::string csv = std::string(kCsvHeader) + "\n";
    for (const auto& r : run.records) csv += csv_row(r) + "\n";
    const std::string name = "run_" + std::to_string(run.runId) + ".csv";
    write_file(dir / name, csv);
    out.files.push_back(std::filesystem::path(cfg.scenario) / name);
    for (const auto& [file, content] : run.artifacts) {
      write_file(dir / file, content);
      out.files.push_back(std::filesystem::path(cfg.scenario) / file);
    }
  }
  nlohmann::json summary = summary_json(cfg.scenario, out.summary);
  summary["checks"] = nlohmann::json::array();
  for (const auto& c : out.checks)
    summary["checks"].push_back({{"check", c.check.describe()}, {"observed", c.observed}, {"passed", c.passed}});
  summary["passed"] = out.passed;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  out.files.push_back(std::filesystem::path(cfg.scenario) / "summary.json");
  out.runs = std::move(results);
  return out;
}

}  // namespace spo::harness
