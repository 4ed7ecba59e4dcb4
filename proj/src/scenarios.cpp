// Built-in scenarios: each reproduces one experiment and declares the
// acceptance checks evaluated on its summary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "spo/baselines.hpp"
#include "spo/envs.hpp"
#include "spo/game_solve.hpp"
#include "spo/harness.hpp"
#include "spo/learners.hpp"
#include "spo/practical.hpp"
#include "spo/pref_core.hpp"
#include "spo/selfplay.hpp"

namespace spo::harness {

namespace {

using Clock = std::chrono::steady_clock;

std::string vector_digest(std::span<const double> p) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", p[i]);
    if (i) out += ';';
    out += buf;
  }
  return out;
}

/// FNV-1a over the probability tables.
std::string policy_digest(const env::TabularHistoryPolicy& pi) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t step = 0; step < pi.horizon(); ++step)
    for (std::uint64_t row = 0; row < pi.rows(step); ++row)
      for (double v : pi.probs(step, row)) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char b : bytes) h = (h ^ b) * 0x100000001b3ULL;
      }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  return out;
}

pref::SubpopulationSpec weights_of(const ExperimentConfig& cfg) {
  const auto w = parse_doubles(cfg.param("weights", "0.5,0.3,0.2"));
  if (w.size() != 3) throw std::invalid_argument("weights must have three entries");
  pref::SubpopulationSpec spec{w[0], w[1], w[2]};
  spec.validate();
  return spec;
}

std::size_t every_of(std::size_t T) { return std::max<std::size_t>(1, T / 100); }

/// Wall-clock stamps are opt-in so that default output is reproducible.
struct Stopwatch {
  bool enabled;
  Clock::time_point start = Clock::now();
  std::optional<double> elapsed() const {
    if (!enabled) return std::nullopt;
    return std::chrono::duration<double>(Clock::now() - start).count();
  }
};

ExperimentConfig base_defaults(const std::string& id, std::size_t T, const std::string& seeds = "0-9") {
  ExperimentConfig cfg;
  cfg.scenario = id;
  cfg.T = T;
  cfg.seeds = parse_seed_list(seeds);
  cfg.masterSeed = 20240101;
  return cfg;
}

// ---------------------------------------------------------------------------
// Normal-form scenarios

RunResult run_rps_bandit(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  const auto m = pref::rock_paper_scissors();
  const auto mw = game::MixedStrategy::uniform(3);
  sp::BanditRunConfig bc;
  bc.T = *cfg.T;
  bc.eta = cfg.eta.value_or(0.0);
  bc.gamma = cfg.gamma.value_or(-1.0);
  bc.alpha = cfg.alpha.value_or(0.5);
  bc.seed = seed;
  RunResult out;
  Stopwatch clock{cfg.recordWallTime};
  sp::RunOptions opts;
  opts.recordEvery = every_of(bc.T);
  opts.onProgress = [&](const sp::Progress& p) {
    const game::MixedStrategy avg(std::vector<double>(p.average.begin(), p.average.end()));
    out.records.push_back({runId, seed, p.t, vector_digest(p.average), game::exploitability(m, avg),
                           game::l1_distance(p.average, mw.view()), std::nullopt, std::nullopt, p.queries, clock.elapsed()});
  };
  const auto run = sp::run_selfplay_bandit(m, bc, opts);
  const game::MixedStrategy avg(run.averageStrategy);
  out.metrics["l1_to_mw"] = game::l1_distance(avg.view(), mw.view());
  out.metrics["exploitability"] = game::exploitability(m, avg);
  out.metrics["queries"] = static_cast<double>(run.queryCount);
  return out;
}

RunResult run_fullfeedback(const pref::PreferenceMatrix& m, const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  const std::size_t T = *cfg.T;
  const auto mw = game::exact_minimax_winner(m).strategy;
  learn::HedgeState hedge(m.size(), cfg.eta.value_or(learn::HedgeState::default_eta(m.size(), T)));
  RunResult out;
  Stopwatch clock{cfg.recordWallTime};
  sp::RunOptions opts;
  opts.recordEvery = every_of(T);
  opts.onProgress = [&](const sp::Progress& p) {
    const game::MixedStrategy avg(std::vector<double>(p.average.begin(), p.average.end()));
    out.records.push_back({runId, seed, p.t, vector_digest(p.average), game::exploitability(m, avg),
                           game::l1_distance(p.average, mw.view()), p.regret, std::nullopt, p.queries, clock.elapsed()});
  };
  const auto run = sp::run_selfplay_fullfeedback(m, hedge, T, opts);
  const game::MixedStrategy avg(run.averageStrategy);
  const double exploit = game::exploitability(m, avg);
  out.metrics["l1_to_mw"] = game::l1_distance(avg.view(), mw.view());
  out.metrics["exploitability"] = exploit;
  out.metrics["realized_regret"] = run.realizedRegret;
  out.metrics["regret_bound_slack"] = 2.0 * run.realizedRegret / static_cast<double>(T) + 1e-9 - exploit;
  return out;
}

RunResult run_subpop_selfplay(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  return run_fullfeedback(pref::subpopulation_matrix(weights_of(cfg)), cfg, seed, runId);
}

RunResult run_gap(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  const std::size_t n = static_cast<std::size_t>(cfg.param_double("options", 6));
  const double delta = cfg.param_double("delta", 0.4);
  auto out = run_fullfeedback(pref::gap_condition_matrix(n, delta), cfg, seed, runId);
  const double T = static_cast<double>(*cfg.T);
  const double bound = (1.0 + 2.0 * static_cast<double>(n) * std::log(T)) / (delta * T);
  out.metrics["fast_rate_bound"] = bound;
  out.metrics["fast_rate_slack"] = 5.0 * bound - out.metrics["exploitability"];
  out.metrics["exploitability_times_T"] = out.metrics["exploitability"] * T;
  return out;
}

RunResult run_dpo(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  const auto m = pref::rlhf_counterexample();
  const auto betas = parse_doubles(cfg.param("betas", "0.1,1,10"));
  const double resolution = cfg.param_double("resolution", 0.005);
  const auto rows = base::dpo_analysis(m, betas, resolution);
  const auto mw = game::exact_minimax_winner(m).strategy;
  const std::vector<double> expected{5.0 / 12.0, 5.0 / 12.0, 1.0 / 6.0};
  RunResult out;
  out.artifacts["dpo.csv"] = base::dpo_csv(rows);
  double margin = std::numeric_limits<double>::infinity();
  double uniformError = 0.0;
  double closest = std::numeric_limits<double>::infinity();
  const double perTerm = static_cast<double>(base::dpo_term_count(m)) * std::log(2.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    margin = std::min(margin, rows[i].lossMinimaxWinner - rows[i].lossReference);
    uniformError = std::max(uniformError, std::abs(rows[i].lossReference - perTerm));
    closest = std::min(closest, rows[i].argminDistance);
    out.records.push_back({runId, seed, i, "beta=" + format_double(rows[i].beta), std::nullopt, rows[i].argminDistance,
                           std::nullopt, std::nullopt, 0, std::nullopt});
  }
  double parity = 0.0;
  for (double beta : betas) {
    const auto pi = base::soft_opt_policy(base::RewardTable{1, 3, {0.0, 1.0, 0.0}}, game::MixedStrategy::uniform(3), beta);
    parity = std::max(parity, std::abs(pi[0] - pi[2]));
  }
  // Which outcome family the Bradley-Terry fit of the exact win rates lands in.
  base::BTFitConfig fit;
  fit.epochs = 500;
  const auto rlhf = base::rlhf_closed_form(m, 1.0, fit);
  out.artifacts["rlhf_fit.json"] = nlohmann::json{{"reward", rlhf.reward.values},
                                                  {"policy", rlhf.policy.probs},
                                                  {"top_options", rlhf.topOptions}}
                                       .dump(2) +
                                   "\n";
  out.metrics["rlhf_top_option"] = static_cast<double>(rlhf.topOptions.front());
  out.metrics["mw_linf_error"] = game::linf_distance(mw.view(), expected);
  out.metrics["uniform_loss_error"] = uniformError;
  out.metrics["min_loss_margin"] = margin;
  out.metrics["min_argmin_l1_to_mw"] = closest;
  out.metrics["rlhf_a_c_gap"] = parity;
  return out;
}

RunResult run_contextual(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  const env::ContextualBandit cb({0.5, 0.5}, {pref::rock_paper_scissors(), pref::rock_paper_scissors()});
  sp::ContextualConfig cc;
  cc.k = cfg.k.value_or(2);
  cc.T = *cfg.T;
  cc.eta = cfg.eta.value_or(0.0);
  cc.gamma = cfg.gamma.value_or(-1.0);
  cc.seed = seed;
  Stopwatch clock{cfg.recordWallTime};
  const auto run = sp::run_spo_contextual(cb, cc);
  RunResult out;
  double worst = 0.0;
  std::string digest;
  for (std::size_t x = 0; x < cb.contexts(); ++x) {
    const auto mw = game::MixedStrategy::uniform(cb.arms(x));
    worst = std::max(worst, game::l1_distance(run.averageStrategies[x], mw.view()));
    if (x) digest += '|';
    digest += vector_digest(run.averageStrategies[x]);
  }
  out.records.push_back({runId, seed, cc.T, digest, std::nullopt, worst, std::nullopt, std::nullopt, run.queries, clock.elapsed()});
  out.metrics["max_context_l1_to_mw"] = worst;
  return out;
}

// ---------------------------------------------------------------------------
// History-level self-play

RunResult run_tabular(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  const auto mdp = env::builtin_mdp(cfg.environment.empty() ? "intransitive-chain" : cfg.environment);
  pref::MatrixOracle oracle(pref::rock_paper_scissors(), [](const pref::Trajectory& t) { return env::intransitive_chain_class(t); });
  const auto table = sp::trajectory_preference_table(mdp, oracle);
  sp::TabularSpoConfig tc;
  tc.T = *cfg.T;
  tc.eta = cfg.eta.value_or(0.0);
  tc.seed = seed;
  const std::size_t every = every_of(tc.T);
  RunResult out;
  Stopwatch clock{cfg.recordWallTime};
  const auto run = sp::run_spo_tabular(mdp, oracle, tc, [&](std::size_t t, std::span<const double> mixture, const env::TabularHistoryPolicy& next) {
    if (t % every != 0 && t != tc.T) return;
    const double gap = sp::sequential_duality_gap(mdp, table, mixture);
    out.records.push_back({runId, seed, t, policy_digest(next), gap, std::nullopt, std::nullopt, std::nullopt,
                           t * static_cast<std::size_t>(table.size()), clock.elapsed()});
  });
  const double gap = sp::sequential_duality_gap(mdp, table, run.mixtureDistribution);
  const double bound = sp::sequential_gap_bound(mdp.horizon(), mdp.actions(), tc.T);
  out.metrics["duality_gap"] = gap;
  out.metrics["gap_bound"] = bound;
  out.metrics["gap_bound_slack"] = bound - gap;
  out.metrics["max_self_reward"] = run.maxSelfReward;
  return out;
}

// ---------------------------------------------------------------------------
// Practical loop scenarios

practical::PracticalConfig practical_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  practical::PracticalConfig pc;
  pc.T = *cfg.T;
  pc.improver.stepSize = cfg.eta.value_or(0.1);
  pc.improver.rewardRate = cfg.rho.value_or(0.2);
  pc.improver.entropy = cfg.tau.value_or(0.0);
  pc.improver.importanceWeighted = cfg.param_double("importance_weighted", 1.0) != 0.0;
  pc.improver.weightCap = cfg.param_double("weight_cap", 100.0);
  pc.validationSamples = static_cast<std::size_t>(cfg.param_double("validation_samples", 200));
  pc.seed = seed;
  return pc;
}

base::RmConfig rm_config(const ExperimentConfig& cfg) {
  base::RmConfig rm;
  rm.fit.epochs = static_cast<std::size_t>(cfg.param_double("bt_epochs", 30));
  rm.fit.batchSize = static_cast<std::size_t>(cfg.param_double("bt_batch", 64));
  rm.fit.regularization = cfg.param_double("bt_lambda", 0.0);
  rm.refitEvery = static_cast<std::size_t>(cfg.param_double("refit_every", 16));
  rm.comparisonWindow = static_cast<std::size_t>(cfg.param_double("comparison_window", 4096));
  rm.rewardClip = cfg.param_double("reward_clip", 5.0);
  return rm;
}

struct PracticalOutput {
  practical::PracticalRun run;
  RunResult result;
};

/// Shared driver: the reward source is the queue win rate or a fitted
/// Bradley-Terry model; everything else is identical.
PracticalOutput drive_practical(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId, const env::TabularMDP& mdp,
                                pref::OraclePtr oracle, bool rewardModel, const std::function<std::optional<double>(const env::TabularHistoryPolicy&)>& groundTruth,
                                const std::vector<double>* mw = nullptr) {
  auto pc = practical_config(cfg, seed);
  std::unique_ptr<practical::RewardLabeler> labeler;
  if (rewardModel) {
    labeler = std::make_unique<base::RewardModelLabeler>(mdp, oracle, rm_config(cfg));
    pc.warmUp = static_cast<std::size_t>(cfg.param_double("warm_up", 16));
  } else {
    pc.warmUp = cfg.B.value_or(10);
    labeler = std::make_unique<practical::QueueWinRateLabeler>(oracle, pc.warmUp);
  }
  PracticalOutput out;
  const std::size_t every = every_of(pc.T);
  const std::size_t s0 = practical::main_initial_state(mdp);
  std::vector<double> running(mdp.actions(), 0.0);
  Stopwatch clock{cfg.recordWallTime};
  out.run = practical::run_practical(mdp, *oracle, *labeler, pc, [&](std::size_t t, const pref::Trajectory&, const env::TabularHistoryPolicy& next) {
    if (mw) {
      const auto p = next.probs(0, s0);
      for (std::size_t a = 0; a < running.size(); ++a) running[a] += p[a];
    }
    if (t % every != 0 && t != pc.T) return;
    RunRecord r{runId, seed, t, {}, std::nullopt, std::nullopt, std::nullopt, groundTruth(next), labeler->queries(), clock.elapsed()};
    if (mw) {
      std::vector<double> avg(running);
      for (double& v : avg) v /= static_cast<double>(t);
      r.digest = vector_digest(next.probs(0, s0));
      r.l1ToMw = game::l1_distance(avg, *mw);
    } else {
      r.digest = policy_digest(next);
    }
    out.result.records.push_back(std::move(r));
  });
  out.result.metrics["queries"] = static_cast<double>(out.run.queries);
  return out;
}

std::optional<double> no_return(const env::TabularHistoryPolicy&) { return std::nullopt; }

RunResult run_subpop_practical(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId, bool rewardModel) {
  const auto m = pref::subpopulation_matrix(weights_of(cfg));
  const auto mdp = env::builtin_mdp("bandit3");
  const auto mw = game::exact_minimax_winner(m).strategy.probs;
  auto out = drive_practical(cfg, seed, runId, mdp, std::make_shared<pref::MatrixOracle>(m), rewardModel, no_return, &mw);
  out.result.metrics["l1_to_mw"] = game::l1_distance(out.run.averageInitialStrategy, mw);
  out.result.metrics["tail_l1_to_mw"] = game::l1_distance(out.run.tailAverageInitialStrategy, mw);
  return std::move(out.result);
}

RunResult run_gridworld(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  const auto mdp = env::builtin_mdp(cfg.environment.empty() ? "gridworld" : cfg.environment);
  pref::OraclePtr oracle = std::make_shared<pref::MaxRewardOracle>();
  const double flip = cfg.param_double("flip", 0.0);
  if (flip > 0.0) oracle = std::make_shared<pref::NoisyPreference>(oracle, pref::NoiseSpec{flip, derive_seed(seed, 0x5EED)});
  const auto truth = [&](const env::TabularHistoryPolicy& p) -> std::optional<double> {
    return env::expected_reward(mdp, p, 0, mdp.horizon());
  };
  auto out = drive_practical(cfg, seed, runId, mdp, oracle, cfg.param("reward_source", "queue") == "rm", truth);
  const double optimum = env::optimal_markov_return(mdp);
  const double best = env::expected_reward(mdp, out.run.best, 0, mdp.horizon());
  out.result.metrics["optimal_return"] = optimum;
  out.result.metrics["best_return"] = best;
  out.result.metrics["best_return_fraction"] = best / optimum;
  return std::move(out.result);
}

/// Deterministic evaluation: every row replaced by its most likely action.
env::TabularHistoryPolicy greedy_of(const env::TabularHistoryPolicy& pi) {
  env::TabularHistoryPolicy out = pi;
  for (std::size_t h = 0; h < pi.horizon(); ++h)
    for (std::uint64_t row = 0; row < pi.rows(h); ++row) {
      const auto p = pi.probs(h, row);
      std::vector<double> onehot(p.size(), 0.0);
      onehot[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())] = 1.0;
      out.set(h, row, onehot);
    }
  return out;
}

RunResult run_harvest(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId, bool rewardModel) {
  const auto mdp = env::builtin_mdp("harvest");
  const pref::NonMarkovSpec spec{cfg.param_double("r_max", 1.0), cfg.param_double("split", 0.75)};
  const auto truth = [&](const env::TabularHistoryPolicy& p) -> std::optional<double> {
    return env::expected_reward(mdp, p, 0, mdp.horizon());
  };
  auto out = drive_practical(cfg, seed, runId, mdp, std::make_shared<pref::NonMarkovOracle>(spec), rewardModel, truth);
  const std::size_t tailBegin = spec.tail_begin(mdp.horizon());
  const auto greedy = greedy_of(out.run.best);
  const double total = env::expected_reward(mdp, greedy, 0, mdp.horizon());
  const double tail = env::expected_reward(mdp, greedy, tailBegin, mdp.horizon());
  const bool feasible = tail <= spec.thresholdRMax;
  const bool better = total > env::kHarvestMyopicReturn;
  out.result.metrics["best_return"] = total;
  out.result.metrics["best_tail_return"] = tail;
  out.result.metrics["sampled_best_return"] = env::expected_reward(mdp, out.run.best, 0, mdp.horizon());
  out.result.metrics["sampled_best_tail_return"] = env::expected_reward(mdp, out.run.best, tailBegin, mdp.horizon());
  out.result.metrics["success"] = feasible && better ? 1.0 : 0.0;
  out.result.metrics["failure"] = feasible && better ? 0.0 : 1.0;
  return std::move(out.result);
}

RunResult run_pointnav(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t runId) {
  const env::PointNavSpec spec;
  const auto mdp = env::make_pointnav(spec);
  pref::GeometricParams params;
  params.distThreshold = cfg.param_double("dist_threshold", params.distThreshold);
  auto oracle = std::make_shared<pref::GeometricOracle>([spec](const pref::Trajectory& t) { return env::pointnav_endpoint(spec, t); }, params);
  auto out = drive_practical(cfg, seed, runId, mdp, oracle, false, no_return);
  const auto& cps = out.run.checkpoints;
  const std::size_t start = cps.size() - cps.size() / 4;
  const std::size_t perCheckpoint = static_cast<std::size_t>(cfg.param_double("endpoint_samples", 20));
  double radius = 0.0;
  std::size_t count = 0;
  std::set<std::size_t> octants;
  for (std::size_t c = start; c < cps.size(); ++c) {
    for (std::size_t k = 0; k < perCheckpoint; ++k) {
      const auto xi = env::rollout(mdp, cps[c], derive_seed(seed ^ 0xE11D, c * perCheckpoint + k));
      const auto e = env::pointnav_endpoint(spec, xi);
      radius += e.radius;
      ++count;
      octants.insert(env::octant_of(e.angle));
    }
  }
  out.result.metrics["tail_mean_radius"] = radius / static_cast<double>(count);
  out.result.metrics["tail_octants"] = static_cast<double>(octants.size());
  return std::move(out.result);
}

std::vector<Scenario> build() {
  std::vector<Scenario> all;
  const auto add = [&](std::string id, std::string algorithm, std::string description, ExperimentConfig defaults,
                       std::vector<Check> checks, RunFn run, bool seedless = false) {
    defaults.scenario = id;
    defaults.algorithm = algorithm;
    all.push_back({std::move(id), std::move(algorithm), std::move(description), seedless, std::move(defaults), std::move(checks), std::move(run)});
  };
  using A = Aggregate;
  using C = Compare;

  add("rps-selfplay", "spo-bandit", "Bandit-feedback self-play on rock-paper-scissors, one comparison per round",
      base_defaults("rps-selfplay", 1'000'000), {{"l1_to_mw", A::Mean, C::LessEqual, 0.1}}, run_rps_bandit);

  {
    auto d = base_defaults("subpop-selfplay", 50'000, "0");
    d.params["weights"] = "0.5,0.3,0.2";
    add("subpop-selfplay", "spo-full", "Full-feedback Hedge self-play on a three-subpopulation matrix", d,
        {{"l1_to_mw", A::Max, C::LessEqual, 0.05}, {"regret_bound_slack", A::Min, C::GreaterEqual, 0.0}}, run_subpop_selfplay, true);
  }
  {
    auto d = base_defaults("subpop-practical", 200'000);
    d.params["weights"] = "0.5,0.3,0.2";
    d.B = 10;
    d.eta = 0.003;
    d.rho = 0.2;
    add("subpop-practical", "spo-practical", "Queue win-rate self-play on a three-subpopulation matrix", d,
        {{"l1_to_mw", A::Max, C::LessEqual, 0.05}},
        [](const ExperimentConfig& c, std::uint64_t s, std::size_t r) { return run_subpop_practical(c, s, r, false); });
  }
  {
    auto d = base_defaults("subpop-rm", 20'000);
    d.params["weights"] = "0.5,0.3,0.2";
    d.eta = 0.003;
    d.rho = 0.2;
    add("subpop-rm", "rm", "Iterative Bradley-Terry reward model on a three-subpopulation matrix", d,
        {{"tail_l1_to_mw", A::Min, C::GreaterEqual, 0.2}},
        [](const ExperimentConfig& c, std::uint64_t s, std::size_t r) { return run_subpop_practical(c, s, r, true); });
  }
  add("dpo-counterexample", "dpo-analysis", "Closed-form DPO and RLHF solutions on the three-option counterexample",
      base_defaults("dpo-counterexample", 1, "0"),
      {{"mw_linf_error", A::Max, C::LessEqual, 1e-8},
       {"uniform_loss_error", A::Max, C::LessEqual, 1e-9},
       {"min_loss_margin", A::Min, C::Greater, 0.0},
       {"rlhf_a_c_gap", A::Max, C::LessEqual, 0.0}},
      run_dpo, true);
  {
    auto d = base_defaults("gap-fast-rate", 10'000, "0");
    d.eta = 1.0;
    add("gap-fast-rate", "spo-full", "Hedge self-play with an isolated winner; fast-rate check", d,
        {{"fast_rate_slack", A::Min, C::GreaterEqual, 0.0}}, run_gap, true);
  }
  add("tabular-intransitive", "spo-tabular", "History-level self-play on a two-state chain with cyclic trajectory preferences",
      base_defaults("tabular-intransitive", 2000, "0"), {{"gap_bound_slack", A::Min, C::GreaterEqual, 0.0}}, run_tabular, true);
  {
    auto d = base_defaults("gridworld-maxreward", 2000);
    d.B = 10;
    d.eta = 0.1;
    d.rho = 0.2;
    add("gridworld-maxreward", "spo-practical", "Queue self-play with the max-reward oracle on a 5x5 gridworld", d,
        {{"best_return_fraction", A::Min, C::GreaterEqual, 0.95}}, run_gridworld);
    d.scenario = "gridworld-noisy";
    d.params["flip"] = "0.1";
    add("gridworld-noisy", "spo-practical", "As gridworld-maxreward with 10% flipped comparisons", d,
        {{"best_return_fraction", A::Min, C::GreaterEqual, 0.9}}, run_gridworld);
  }
  {
    auto d = base_defaults("harvest-nonmarkov", 2000);
    d.B = 10;
    d.eta = 0.1;
    d.rho = 0.2;
    add("harvest-nonmarkov", "spo-practical", "Queue self-play with a tail-constrained non-Markovian preference", d,
        {{"success", A::Min, C::GreaterEqual, 1.0}},
        [](const ExperimentConfig& c, std::uint64_t s, std::size_t r) { return run_harvest(c, s, r, false); });
    d.scenario = "harvest-nonmarkov-rm";
    add("harvest-nonmarkov-rm", "rm", "Iterative reward model on the tail-constrained task", d,
        {{"failure", A::Mean, C::GreaterEqual, 0.7}},
        [](const ExperimentConfig& c, std::uint64_t s, std::size_t r) { return run_harvest(c, s, r, true); });
  }
  {
    auto d = base_defaults("pointnav-intransitive", 30'000);
    d.B = 100;
    d.eta = 0.5;
    d.rho = 0.5;
    d.tau = 0.02;
    d.params["importance_weighted"] = "0";
    add("pointnav-intransitive", "spo-practical", "Queue self-play on a point-navigation lattice with a cyclic geometric preference", d,
        {{"tail_mean_radius", A::Min, C::GreaterEqual, 8.0}, {"tail_octants", A::Min, C::GreaterEqual, 6.0}}, run_pointnav);
  }
  {
    auto d = base_defaults("contextual-rps", 400'000);
    d.k = 2;
    add("contextual-rps", "spo-contextual", "Two contexts, each an independent rock-paper-scissors game", d,
        {{"max_context_l1_to_mw", A::Mean, C::LessEqual, 0.1}}, run_contextual);
  }
  return all;
}

}  // namespace

const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> all = build();
  return all;
}

}  // namespace spo::harness
