#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spo/harness.hpp"

using namespace spo::harness;
using Catch::Approx;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("spo_harness_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

RunResult with_metric(const std::string& name, double v) {
  RunResult r;
  r.metrics[name] = v;
  return r;
}

}  // namespace

TEST_CASE("seed lists") {
  CHECK(parse_seed_list("0-3") == std::vector<std::uint64_t>{0, 1, 2, 3});
  CHECK(parse_seed_list("5, 1,9") == std::vector<std::uint64_t>{5, 1, 9});
  CHECK(parse_seed_list("0-1,7") == std::vector<std::uint64_t>{0, 1, 7});
  CHECK_THROWS(parse_seed_list("3-1"));
  CHECK_THROWS(parse_seed_list("x"));
}

TEST_CASE("metric summaries") {
  const auto one = summarize({with_metric("m", 2.5)});
  CHECK(one.at("m").mean == 2.5);
  CHECK(one.at("m").stderr_ == 0.0);
  CHECK(one.at("m").n == 1);
  const auto flat = summarize({with_metric("m", 1.0), with_metric("m", 1.0), with_metric("m", 1.0)});
  CHECK(flat.at("m").stderr_ == 0.0);
  const auto s = summarize({with_metric("m", 1.0), with_metric("m", 2.0), with_metric("m", 6.0)});
  CHECK(s.at("m").mean == 3.0);
  // Sample variance (4 + 1 + 9) / 2 = 7.
  CHECK(s.at("m").stderr_ == Approx(std::sqrt(7.0 / 3.0)));
  CHECK(s.at("m").min == 1.0);
  CHECK(s.at("m").max == 6.0);
  const auto doc = summary_json("x", s);
  CHECK(doc.at("metrics").at("m").at("n").get<std::size_t>() == 3);
}

TEST_CASE("CSV rows") {
  RunRecord r;
  r.runId = 3;
  r.seed = 42;
  r.t = 100;
  r.digest = "abc";
  r.l1ToMw = 0.1;
  r.queries = 7;
  CHECK(csv_row(r) == "3,42,100,abc,,0.10000000000000001,,,7,");
  CHECK(format_double(1.0 / 3) == "0.33333333333333331");
  CHECK(std::string(kCsvHeader).find("ground_truth_return") != std::string::npos);
}

TEST_CASE("check evaluation") {
  const auto s = summarize({with_metric("a", 1.0), with_metric("a", 3.0)});
  const std::vector<Check> checks{{"a", Aggregate::Mean, Compare::LessEqual, 2.0},
                                  {"a", Aggregate::Min, Compare::Greater, 1.0},
                                  {"a", Aggregate::Max, Compare::GreaterEqual, 3.0},
                                  {"missing", Aggregate::Mean, Compare::LessEqual, 1e9}};
  const auto r = evaluate_checks(checks, s);
  CHECK(r[0].passed);
  CHECK(!r[1].passed);
  CHECK(r[2].passed);
  CHECK(!r[3].passed);
  CHECK(std::isnan(r[3].observed));
  CHECK(checks[0].describe() == "mean(a) <= 2");
}

TEST_CASE("INI configuration") {
  const auto cfg = parse_config(
      "scenario = rps-selfplay\n"
      "[environment]\nid = bandit3\n"
      "[learner]\neta = 0.25\nB = 12\n"
      "[run]\nT = 500\nseeds = 0-2\nmaster_seed = 9\noutput = out\njobs = 2\n"
      "[params]\nweights = 0.2,0.3,0.5\n");
  CHECK(cfg.scenario == "rps-selfplay");
  CHECK(cfg.environment == "bandit3");
  CHECK(cfg.eta == 0.25);
  CHECK(cfg.B == 12u);
  CHECK(!cfg.rho);
  CHECK(cfg.T == 500u);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(cfg.masterSeed == 9u);
  CHECK(cfg.output == "out");
  CHECK(cfg.jobs == 2);
  CHECK(cfg.param("weights", "") == "0.2,0.3,0.5");
  CHECK(cfg.param_double("missing", 1.5) == 1.5);
  CHECK_THROWS(parse_config("[run]\nT = 5\n"));
}

TEST_CASE("defaults merge") {
  ExperimentConfig o;
  o.scenario = "subpop-practical";
  o.T = 100;
  o.params["weights"] = "0.5,0.25,0.25";
  const auto cfg = merge_with_defaults(o);
  CHECK(cfg.T == 100u);
  CHECK(cfg.eta == find_scenario("subpop-practical").defaults.eta);
  CHECK(cfg.param("weights", "") == "0.5,0.25,0.25");
  CHECK(!cfg.seeds.empty());
  ExperimentConfig unknown;
  unknown.scenario = "no-such-scenario";
  CHECK_THROWS_AS(merge_with_defaults(unknown), std::invalid_argument);
}

TEST_CASE("scenario registry") {
  const auto& all = scenarios();
  CHECK(all.size() >= 12);
  for (const auto& s : all) {
    CHECK(!s.checks.empty());
    CHECK(find_scenario(s.id).id == s.id);
    CHECK_NOTHROW(s.defaults.validate());
  }
}

TEST_CASE("experiment output files") {
  ExperimentConfig cfg;
  cfg.scenario = "dpo-counterexample";
  cfg.output = scratch("dpo");
  const auto out = run_experiment(cfg);
  CHECK(out.passed);
  CHECK(std::filesystem::exists(cfg.output / "dpo-counterexample" / "summary.json"));
  CHECK(std::filesystem::exists(cfg.output / "dpo-counterexample" / "run_0.csv"));
  CHECK(std::filesystem::exists(cfg.output / "dpo-counterexample" / "dpo.csv"));
  const auto summary = nlohmann::json::parse(slurp(cfg.output / "dpo-counterexample" / "summary.json"));
  CHECK(summary.at("passed").get<bool>());
  std::filesystem::remove_all(cfg.output);
}

TEST_CASE("reruns and worker counts give identical bytes") {
  const auto dirA = scratch("a"), dirB = scratch("b"), dirC = scratch("c");
  ExperimentConfig cfg;
  cfg.scenario = "rps-selfplay";
  cfg.T = 3000;
  cfg.seeds = {0, 1, 2};
  cfg.jobs = 1;
  cfg.output = dirA;
  const auto a = run_experiment(cfg);
  cfg.jobs = 3;
  cfg.output = dirB;
  const auto b = run_experiment(cfg);
  REQUIRE(a.files == b.files);
  for (const auto& f : a.files) CHECK(slurp(dirA / f) == slurp(dirB / f));
  cfg.masterSeed = 7;
  cfg.output = dirC;
  run_experiment(cfg);
  CHECK(slurp(dirC / "rps-selfplay" / "run_0.csv") != slurp(dirB / "rps-selfplay" / "run_0.csv"));
  for (const auto& d : {dirA, dirB, dirC}) std::filesystem::remove_all(d);
}

TEST_CASE("invalid experiments") {
  ExperimentConfig cfg;
  cfg.scenario = "nope";
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  ExperimentConfig zero;
  zero.scenario = "rps-selfplay";
  zero.T = 0;
  zero.seeds = {0};
  CHECK_THROWS(zero.validate());
}

TEST_CASE("worker count from the environment") {
  ::setenv("SPO_LAB_JOBS", "3", 1);
  CHECK(default_jobs() == 3);
  ::setenv("SPO_LAB_JOBS", "junk", 1);
  CHECK(default_jobs() >= 1);
  ::unsetenv("SPO_LAB_JOBS");
}
