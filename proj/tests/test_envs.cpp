#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numbers>

#include "spo/envs.hpp"

using namespace spo;
using namespace spo::env;
using Catch::Approx;

namespace {

TabularMDP random_mdp(std::size_t S, std::size_t A, std::size_t H, CounterRng& rng) {
  TabularMDP mdp(S, A, H);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<Outcome> out;
      double total = 0.0;
      for (std::size_t n = 0; n < S; ++n) {
        const double w = rng.uniform();
        out.push_back({static_cast<int>(n), w});
        total += w;
      }
      for (auto& o : out) o.prob /= total;
      mdp.set_transition(s, a, out);
    }
  std::vector<double> init(S);
  double total = 0.0;
  for (auto& v : init) total += (v = 0.1 + rng.uniform());
  for (auto& v : init) v /= total;
  mdp.set_initial(init);
  return mdp;
}

TabularHistoryPolicy random_policy(const TabularMDP& mdp, PolicyMode mode, CounterRng& rng) {
  auto pi = TabularHistoryPolicy::uniform(mdp, mode);
  for (std::size_t h = 0; h < pi.horizon(); ++h)
    for (std::uint64_t row = 0; row < pi.rows(h); ++row) {
      std::vector<double> p(mdp.actions());
      double total = 0.0;
      for (auto& v : p) total += (v = 0.05 + rng.uniform());
      for (auto& v : p) v /= total;
      pi.set(h, row, p);
    }
  return pi;
}

/// Probability of a trajectory computed by walking its steps.
double path_probability(const TabularMDP& mdp, const TabularHistoryPolicy& pi, const std::vector<Step>& steps) {
  const HistoryCodec codec(mdp.states(), mdp.actions(), mdp.horizon());
  double p = mdp.initial()[static_cast<std::size_t>(steps[0].state)];
  std::uint64_t row = static_cast<std::uint64_t>(steps[0].state);
  for (std::size_t h = 0; h < steps.size(); ++h) {
    const auto a = static_cast<std::size_t>(steps[h].action);
    p *= pi.probs(h, pi.row_of(row))[a];
    if (h + 1 < steps.size()) {
      double t = 0.0;
      for (const auto& o : mdp.next(static_cast<std::size_t>(steps[h].state), a))
        if (o.state == steps[h + 1].state) t = o.prob;
      p *= t;
      row = codec.extend(row, a, static_cast<std::size_t>(steps[h + 1].state));
    }
  }
  return p;
}

}  // namespace

TEST_CASE("MDP validation and JSON") {
  auto mdp = builtin_mdp("chain");
  CHECK_NOTHROW(mdp.validate());
  const auto copy = TabularMDP::from_json(mdp.to_json());
  CHECK(copy.to_json() == mdp.to_json());
  auto broken = mdp;
  broken.set_transition(0, 0, {{0, 0.5}, {1, 0.4}});
  CHECK_THROWS(broken.validate());
  CHECK_THROWS(mdp.set_initial({0.5, 0.6}));
  CHECK_THROWS(builtin_mdp("nope"));
  for (const auto& id : builtin_ids()) CHECK_NOTHROW(builtin_mdp(id).validate());
}

TEST_CASE("history codec is a bijection") {
  const HistoryCodec codec(3, 2, 4);
  CHECK(codec.count(0) == 3);
  CHECK(codec.count(2) == 3 * 36);
  CHECK(codec.trajectory_count() == 6 * 6 * 6 * 6);
  for (std::size_t h = 0; h < 4; ++h)
    for (std::uint64_t row = 0; row < codec.count(h); ++row) {
      const auto [prefix, current] = codec.decode(h, row);
      REQUIRE(prefix.size() == h);
      REQUIRE(codec.encode(prefix, current) == row);
    }
  for (std::uint64_t id = 0; id < codec.trajectory_count(); ++id) {
    Trajectory t;
    t.steps = codec.decode_trajectory(id);
    REQUIRE(codec.trajectory_id(t) == id);
  }
}

TEST_CASE("rollouts") {
  SECTION("deterministic dynamics and policy give the unique path") {
    const auto mdp = builtin_mdp("gridworld");
    auto pi = TabularHistoryPolicy::uniform(mdp, PolicyMode::Markov);
    for (std::size_t h = 0; h < mdp.horizon(); ++h)
      for (std::size_t s = 0; s < mdp.states(); ++s) pi.set(h, s, std::vector<double>{0, 0, 0, 0, 1});  // move +x
    const auto t = rollout(mdp, pi, 1);
    CHECK(t.steps.size() == 12);
    CHECK(t.steps[0].state == 0);
    CHECK(t.steps[4].state == 20);
    CHECK(t.steps[11].state == 20);
    CHECK(rollout(mdp, pi, 2) == t);
    REQUIRE(t.perStepReward);
    CHECK(t.perStepReward->at(0) == 0.0);
  }
  SECTION("one-step bandit") {
    const auto mdp = builtin_mdp("bandit3");
    const auto t = rollout(mdp, TabularHistoryPolicy::uniform(mdp, PolicyMode::Markov), 3);
    CHECK(t.steps.size() == 1);
    CHECK(!t.perStepReward);
  }
  SECTION("rollout frequencies match enumeration") {
    const auto mdp = builtin_mdp("chain");
    CounterRng prng(5);
    const auto pi = random_policy(mdp, PolicyMode::Full, prng);
    const auto dist = enumerate_trajectory_distribution(mdp, pi);
    const HistoryCodec codec(2, 2, 3);
    std::vector<double> counts(dist.size(), 0.0);
    CounterRng rng(6);
    const int n = 100000;
    for (int k = 0; k < n; ++k) counts[codec.trajectory_id(rollout(mdp, pi, rng))] += 1;
    for (std::size_t id = 0; id < dist.size(); ++id) {
      const double se = std::sqrt(dist[id] * (1 - dist[id]) / n);
      REQUIRE(std::abs(counts[id] / n - dist[id]) <= 4 * se + 1e-12);
    }
  }
}

TEST_CASE("trajectory enumeration") {
  CounterRng rng(10);
  for (int k = 0; k < 10; ++k) {
    const auto mdp = random_mdp(2 + k % 2, 2, 3, rng);
    const auto pi = random_policy(mdp, k % 2 ? PolicyMode::Full : PolicyMode::Markov, rng);
    const auto dist = enumerate_trajectory_distribution(mdp, pi);
    double total = 0.0;
    const HistoryCodec codec(mdp.states(), mdp.actions(), mdp.horizon());
    for (std::uint64_t id = 0; id < dist.size(); ++id) {
      total += dist[id];
      REQUIRE(dist[id] == Approx(path_probability(mdp, pi, codec.decode_trajectory(id))).margin(1e-15));
    }
    CHECK(total == Approx(1.0).margin(1e-9));
  }
  SECTION("uniform everything is equiprobable") {
    TabularMDP mdp(2, 2, 2);
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t a = 0; a < 2; ++a) mdp.set_transition(s, a, {{0, 0.5}, {1, 0.5}});
    mdp.set_initial({0.5, 0.5});
    const auto dist = enumerate_trajectory_distribution(mdp, TabularHistoryPolicy::uniform(mdp, PolicyMode::Full));
    CHECK(dist.size() == 16);
    for (double p : dist) CHECK(p == 1.0 / 16);
  }
  SECTION("deterministic everything is a point mass") {
    const auto mdp = builtin_mdp("harvest");
    auto pi = TabularHistoryPolicy::uniform(mdp, PolicyMode::Markov);
    for (std::size_t h = 0; h < mdp.horizon(); ++h) pi.set(h, 0, std::vector<double>{0, 1, 0});
    const auto dist = enumerate_trajectory_distribution(mdp, pi);
    CHECK(support_of(dist).size() == 1);
  }
  SECTION("size guard") {
    const auto mdp = builtin_mdp("pointnav");
    CHECK_THROWS(enumerate_trajectory_distribution(mdp, TabularHistoryPolicy::uniform(mdp, PolicyMode::Markov)));
  }
}

TEST_CASE("policy-level preference") {
  const auto mdp = builtin_mdp("chain");
  pref::MaxRewardOracle oracle;
  CounterRng rng(3);
  const auto p1 = random_policy(mdp, PolicyMode::Full, rng);
  const auto p2 = random_policy(mdp, PolicyMode::Full, rng);
  CHECK(policy_preference(mdp, p1, p1, oracle) == 0.0);
  CHECK(policy_preference(mdp, p1, p2, oracle) == -policy_preference(mdp, p2, p1, oracle));
  const auto mc = policy_preference_mc(mdp, p1, p2, oracle, 20000, 4);
  CHECK(std::abs(mc.mean - policy_preference(mdp, p1, p2, oracle)) <= 4 * mc.stderr_);

  // Two deterministic policies on a deterministic MDP compare their single paths.
  const auto grid = builtin_mdp("harvest");
  auto work = TabularHistoryPolicy::uniform(grid, PolicyMode::Markov), rest = work;
  for (std::size_t h = 0; h < grid.horizon(); ++h) {
    work.set(h, 0, std::vector<double>{0, 0, 1});
    rest.set(h, 0, std::vector<double>{1, 0, 0});
  }
  CHECK(policy_preference(grid, work, rest, oracle) == 1.0);
}

TEST_CASE("reward splitting") {
  Trajectory t;
  t.steps.assign(4, Step{});
  CHECK(split_trajectory_reward(t, 1.0) == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  CHECK(split_trajectory_reward(t, 0.0) == std::vector<double>{0, 0, 0, 0});
  CHECK_THROWS(split_trajectory_reward(Trajectory{}, 1.0));
}

TEST_CASE("collapsed tabular mixture reproduces the mixture distribution") {
  CounterRng rng(21);
  const auto mdp = random_mdp(2, 3, 2, rng);
  std::vector<TabularHistoryPolicy> pols;
  for (int k = 0; k < 3; ++k) pols.push_back(random_policy(mdp, PolicyMode::Full, rng));
  std::vector<double> w{rng.uniform(), rng.uniform(), rng.uniform()};
  const double total = w[0] + w[1] + w[2];
  for (auto& v : w) v /= total;
  const auto collapsed = collapse_tabular(mdp, pols, game::MixedStrategy(w));
  const auto d = enumerate_trajectory_distribution(mdp, collapsed);
  std::vector<double> mix(d.size(), 0.0);
  for (int k = 0; k < 3; ++k) {
    const auto dk = enumerate_trajectory_distribution(mdp, pols[static_cast<std::size_t>(k)]);
    for (std::size_t i = 0; i < d.size(); ++i) mix[i] += w[static_cast<std::size_t>(k)] * dk[i];
  }
  CHECK(game::l1_distance(d, mix) <= 1e-9);
}

TEST_CASE("ground-truth returns") {
  SECTION("gridworld optimum walks to the goal") {
    // Eight moves collect 0 + 1/8 + ... + 7/8, then four steps at the goal collect 1 each.
    CHECK(optimal_markov_return(builtin_mdp("gridworld")) == Approx(3.5 + 4.0));
  }
  SECTION("chain optimum equals the best deterministic Markov policy") {
    const auto mdp = builtin_mdp("chain");
    double best = -1e300;
    for (unsigned mask = 0; mask < 64; ++mask) {
      auto pi = TabularHistoryPolicy::uniform(mdp, PolicyMode::Markov);
      for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t s = 0; s < 2; ++s) {
          const unsigned a = (mask >> (h * 2 + s)) & 1u;
          pi.set(h, s, std::vector<double>{a == 0 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0});
        }
      const auto dist = enumerate_trajectory_distribution(mdp, pi);
      const HistoryCodec codec(2, 2, 3);
      double value = 0.0;
      for (std::uint64_t id = 0; id < dist.size(); ++id) {
        if (dist[id] == 0.0) continue;
        const auto tr = make_trajectory(mdp, codec.decode_trajectory(id));
        value += dist[id] * tr.total_reward();
      }
      best = std::max(best, value);
      CHECK(expected_reward(mdp, pi, 0, 3) == Approx(value).margin(1e-12));
    }
    CHECK(optimal_markov_return(mdp) == Approx(best).margin(1e-12));
  }
  SECTION("occupancy rows are distributions") {
    const auto mdp = builtin_mdp("chain");
    CounterRng rng(2);
    const auto occ = markov_occupancy(mdp, random_policy(mdp, PolicyMode::Markov, rng));
    for (const auto& row : occ) CHECK(row[0] + row[1] == Approx(1.0));
  }
}

TEST_CASE("history dynamic programming matches brute force") {
  CounterRng rng(44);
  const auto mdp = random_mdp(2, 2, 2, rng);
  const HistoryCodec codec(2, 2, 2);
  std::vector<double> value(codec.trajectory_count());
  for (auto& v : value) v = static_cast<double>(rng() % 4);
  const auto dp = history_dp(mdp, value);
  // Brute force over all deterministic full-history policies (2 + 8 rows).
  double best = -1e300;
  for (unsigned mask = 0; mask < (1u << 10); ++mask) {
    auto pi = TabularHistoryPolicy::uniform(mdp, PolicyMode::Full);
    unsigned bit = 0;
    for (std::size_t h = 0; h < 2; ++h)
      for (std::uint64_t row = 0; row < pi.rows(h); ++row, ++bit) {
        const unsigned a = (mask >> bit) & 1u;
        pi.set(h, row, std::vector<double>{a == 0 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0});
      }
    best = std::max(best, expected_value(enumerate_trajectory_distribution(mdp, pi), value));
  }
  CHECK(dp.optimum == Approx(best).margin(1e-12));
  const auto greedy = greedy_history_policy(mdp, dp);
  CHECK(expected_value(enumerate_trajectory_distribution(mdp, greedy), value) == Approx(best).margin(1e-12));
}

TEST_CASE("point navigation") {
  const PointNavSpec spec;
  const auto mdp = make_pointnav(spec);
  CHECK(mdp.states() == 25 * 25);
  CHECK(pointnav_position(spec, pointnav_state(spec, -3, 7)) == std::pair{-3, 7});
  std::vector<pref::GeometricEndpoint> ends;
  for (int a = 0; a < 8; ++a) {
    auto pi = TabularHistoryPolicy::uniform(mdp, PolicyMode::Markov);
    std::vector<double> onehot(8, 0.0);
    onehot[static_cast<std::size_t>(a)] = 1.0;
    for (std::size_t h = 0; h < spec.horizon; ++h)
      for (std::size_t s = 0; s < mdp.states(); ++s) pi.set(h, s, onehot);
    const auto t = rollout(mdp, pi, 0);
    const auto [dx, dy] = pointnav_displacement(a);
    CHECK(pointnav_final_position(spec, t) == std::pair{12 * dx, 12 * dy});
    const auto e = pointnav_endpoint(spec, t);
    CHECK(e.radius == Approx(12.0 * std::hypot(dx, dy)));
    CHECK(octant_of(e.angle) == static_cast<std::size_t>(a));
    ends.push_back(e);
  }
  // Each compass endpoint is beaten by its counter-clockwise neighbour.
  for (std::size_t k = 0; k < 8; ++k) CHECK(pref::geometric_preference(ends[(k + 1) % 8], ends[k]) > 0.0);
  // Moves off the lattice stay put.
  PointNavSpec small{1, 3};
  const auto tiny = make_pointnav(small);
  auto east = TabularHistoryPolicy::uniform(tiny, PolicyMode::Markov);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t s = 0; s < tiny.states(); ++s) east.set(h, s, std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0});
  CHECK(pointnav_final_position(small, rollout(tiny, east, 0)) == std::pair{1, 0});
  CHECK(octant_of(2 * std::numbers::pi - 0.1) == 0);
}

TEST_CASE("contextual bandit validation") {
  CHECK_THROWS(ContextualBandit({0.5, 0.6}, {pref::rock_paper_scissors(), pref::rock_paper_scissors()}));
  CHECK_THROWS(ContextualBandit({1.0}, {}));
  const ContextualBandit cb({0.25, 0.75}, {pref::rock_paper_scissors(), pref::subpopulation_matrix({0.5, 0.3, 0.2})});
  CHECK(cb.contexts() == 2);
  CHECK(cb.preference(1, 0, 1) == 0.2);
}

TEST_CASE("intransitive chain classes") {
  Trajectory t;
  t.steps = {{0, 1}, {1, 1}, {1, 0}};
  CHECK(intransitive_chain_class(t) == 1);
}
