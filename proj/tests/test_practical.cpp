#include <catch_amalgamated.hpp>

#include <cmath>

#include "spo/practical.hpp"

using namespace spo;
using namespace spo::practical;
using Catch::Approx;

namespace {

pref::Trajectory one_step(int action) {
  pref::Trajectory t;
  t.steps = {{0, action}};
  return t;
}

}  // namespace

TEST_CASE("trajectory queue is FIFO with fixed capacity") {
  CHECK_THROWS(TrajectoryQueue(0));
  TrajectoryQueue q(2);
  q.push(one_step(0));
  CHECK(!q.full());
  q.push(one_step(1));
  q.push(one_step(2));
  CHECK(q.full());
  CHECK(q.size() == 2);
  CHECK(q.entries().front() == one_step(1));
  CHECK(q.entries().back() == one_step(2));
}

TEST_CASE("queue win-rate labels") {
  auto oracle = std::make_shared<pref::MatrixOracle>(pref::rock_paper_scissors());
  QueueWinRateLabeler labeler(oracle, 3);
  CounterRng rng(0);
  CHECK_THROWS_AS(labeler.label(one_step(0), rng), std::logic_error);
  const std::vector<pref::Trajectory> init{one_step(0), one_step(1), one_step(1)};
  labeler.warm_up(init, rng);
  // Rock against (rock, scissors, scissors): (0 + 1 + 1) / 3.
  const auto r = labeler.label(one_step(0), rng);
  CHECK(r == std::vector<double>{2.0 / 3});
  CHECK(labeler.queries() == 3);
  // Queue is now (scissors, scissors, rock); paper beats rock, loses to scissors.
  CHECK(labeler.label(one_step(2), rng)[0] == Approx(-1.0 / 3));
  CHECK(labeler.queue().entries().back() == one_step(2));
}

TEST_CASE("improver step is a softmax of advantages on a bandit") {
  const auto mdp = env::builtin_mdp("bandit3");
  ImproverConfig cfg;
  cfg.stepSize = 0.7;
  cfg.rewardRate = 1.0;
  cfg.importanceWeighted = false;
  SoftPolicyImprover imp(mdp, cfg);
  const std::vector<double> r{0.2, -0.4, 0.9};
  for (int a = 0; a < 3; ++a) imp.observe(one_step(a), std::vector<double>{r[static_cast<std::size_t>(a)]});
  for (std::size_t a = 0; a < 3; ++a) CHECK(imp.reward_estimate(0, 0, a) == r[a]);
  imp.improve();
  const double v = (r[0] + r[1] + r[2]) / 3;
  double z = 0.0;
  for (double x : r) z += std::exp(0.7 * (x - v));
  for (std::size_t a = 0; a < 3; ++a) CHECK(imp.policy().probs(0, 0)[a] == Approx(std::exp(0.7 * (r[a] - v)) / z).epsilon(1e-12));
}

TEST_CASE("importance-weighted estimate is unbiased under the current policy") {
  const auto mdp = env::builtin_mdp("bandit3");
  ImproverConfig cfg;
  cfg.rewardRate = 1.0;
  const std::vector<double> r{0.3, -0.6, 0.9};
  std::vector<double> mean(3, 0.0);
  for (int a = 0; a < 3; ++a) {
    SoftPolicyImprover imp(mdp, cfg);
    imp.observe(one_step(a), std::vector<double>{r[static_cast<std::size_t>(a)]});
    for (std::size_t b = 0; b < 3; ++b) {
      const double expected = b == static_cast<std::size_t>(a) ? 3.0 * r[b] : 0.0;
      CHECK(imp.reward_estimate(0, 0, b) == Approx(expected));
      mean[b] += imp.reward_estimate(0, 0, b) / 3.0;  // each action has probability 1/3
    }
  }
  for (std::size_t b = 0; b < 3; ++b) CHECK(mean[b] == Approx(r[b]));
}

TEST_CASE("improver with exact rewards reaches the optimal return") {
  const auto mdp = env::builtin_mdp("chain");
  ImproverConfig cfg;
  cfg.stepSize = 1.0;
  cfg.rewardRate = 1.0;
  cfg.importanceWeighted = false;
  SoftPolicyImprover imp(mdp, cfg);
  CounterRng rng(1);
  for (int k = 0; k < 500; ++k) {
    const auto xi = env::rollout(mdp, imp.policy(), rng);
    imp.observe(xi, *xi.perStepReward);
  }
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t a = 0; a < 2; ++a)
        if (h > 0 || mdp.initial()[s] > 0) REQUIRE(imp.reward_estimate(h, s, a) == mdp.reward(s, a));
  for (int k = 0; k < 300; ++k) imp.improve();
  CHECK(env::expected_reward(mdp, imp.policy(), 0, 3) == Approx(env::optimal_markov_return(mdp)).margin(1e-6));
}

TEST_CASE("configuration validation") {
  ImproverConfig bad;
  bad.rewardRate = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.entropy = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  PracticalConfig pc;
  CHECK_THROWS_AS(pc.validate(), std::invalid_argument);
  const auto mdp = env::builtin_mdp("bandit3");
  SoftPolicyImprover imp(mdp, {});
  pref::Trajectory two;
  two.steps = {{0, 0}, {0, 0}};
  CHECK_THROWS_AS(imp.observe(two, std::vector<double>{0, 0}), std::invalid_argument);
}

TEST_CASE("zero preferences leave the policy uniform") {
  const auto mdp = env::builtin_mdp("chain");
  PracticalConfig cfg;
  cfg.T = 200;
  cfg.seed = 3;
  const auto run = run_spo_practical(mdp, std::make_shared<pref::ZeroOracle>(), 1, cfg);
  const auto uniform = env::TabularHistoryPolicy::uniform(mdp, env::PolicyMode::Markov);
  for (const auto& c : run.checkpoints) REQUIRE(c == uniform);
  CHECK(run.checkpoints.size() == 50);
  CHECK(run.checkpointIterations.back() == 200);
}

TEST_CASE("queue self-play with the max-reward oracle solves the gridworld") {
  const auto mdp = env::builtin_mdp("gridworld");
  PracticalConfig cfg;
  cfg.T = 2000;
  cfg.improver.stepSize = 0.1;
  cfg.improver.rewardRate = 0.2;
  cfg.seed = derive_seed(5, 0);
  const auto run = run_spo_practical(mdp, std::make_shared<pref::MaxRewardOracle>(), 10, cfg);
  CHECK(env::expected_reward(mdp, run.best, 0, mdp.horizon()) >= 0.95 * env::optimal_markov_return(mdp));
  CHECK(run.queries == 2000u * 10u + 200u * run.checkpoints.size());
}

TEST_CASE("practical runs are reproducible") {
  const auto mdp = env::builtin_mdp("chain");
  PracticalConfig cfg;
  cfg.T = 300;
  cfg.seed = 11;
  const auto a = run_spo_practical(mdp, std::make_shared<pref::MaxRewardOracle>(), 5, cfg);
  const auto b = run_spo_practical(mdp, std::make_shared<pref::MaxRewardOracle>(), 5, cfg);
  CHECK(a.best == b.best);
  CHECK(a.checkpointScores == b.checkpointScores);
  cfg.seed = 12;
  const auto c = run_spo_practical(mdp, std::make_shared<pref::MaxRewardOracle>(), 5, cfg);
  CHECK(c.checkpointScores != a.checkpointScores);
}

TEST_CASE("main initial state") {
  auto mdp = env::builtin_mdp("chain");
  CHECK(main_initial_state(mdp) == 0);
  mdp.set_initial({0.3, 0.7});
  CHECK(main_initial_state(mdp) == 1);
}
