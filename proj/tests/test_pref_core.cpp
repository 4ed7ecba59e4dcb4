#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "spo/game_solve.hpp"
#include "spo/pref_core.hpp"

using namespace spo;
using namespace spo::pref;
using Catch::Approx;

namespace {

Trajectory with_rewards(std::vector<double> r, int firstAction = 0) {
  Trajectory t;
  for (std::size_t i = 0; i < r.size(); ++i) t.steps.push_back({0, i == 0 ? firstAction : 0});
  t.perStepReward = std::move(r);
  return t;
}

PreferenceMatrix random_antisymmetric(std::size_t n, CounterRng& rng) {
  PreferenceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, 2.0 * rng.uniform() - 1.0);
  return m;
}

}  // namespace

TEST_CASE("matrix constructor enforces the invariants") {
  CHECK_THROWS_AS(PreferenceMatrix({{0, 1}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(PreferenceMatrix({{1, 0}, {0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(PreferenceMatrix({{0, 2}, {-2, 0}}), std::domain_error);
  CHECK_THROWS_AS(PreferenceMatrix({{0, 1, 0}, {-1, 0}}), std::invalid_argument);
  PreferenceMatrix m(3);
  m.set(0, 2, 0.25);
  CHECK(m(2, 0) == -0.25);
  CHECK_THROWS_AS(m.at(3, 0), std::out_of_range);
  CHECK_THROWS_AS(m.set(1, 1, 0.5), std::invalid_argument);
}

TEST_CASE("subpopulation matrix has the weighted pairwise form") {
  const auto equal = subpopulation_matrix({1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(equal(0, 1) == Approx(1.0 / 3));
  CHECK(equal(0, 2) == Approx(-1.0 / 3));
  CHECK(equal(1, 2) == Approx(1.0 / 3));
  CHECK(equal == rock_paper_scissors().scaled(1.0 / 3));

  const auto single = subpopulation_matrix({1, 0, 0});
  CHECK(single.rows() == std::vector<std::vector<double>>{{0, 0, 0}, {0, 0, 1}, {0, -1, 0}});

  const auto m = subpopulation_matrix({0.5, 0.3, 0.2});
  CHECK(m.rows() == std::vector<std::vector<double>>{{0, 0.2, -0.3}, {-0.2, 0, 0.5}, {0.3, -0.5, 0}});
  CHECK_THROWS(subpopulation_matrix({0.5, 0.5, 0.5}));
  CHECK_THROWS(subpopulation_matrix({1.2, -0.2, 0.0}));
}

TEST_CASE("subpopulation row sums are the Copeland scores") {
  const auto m = subpopulation_matrix({0.5, 0.3, 0.2});
  // Row sums: c - b, a - c, b - a.
  const std::vector<double> scores{-0.1, 0.3, -0.2};
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v;
    CHECK(s == Approx(scores[i]));
  }
  CHECK(game::copeland_winners(m) == std::vector<std::size_t>{1});
}

TEST_CASE("four-option intransitive matrix lookups") {
  const auto m = four_option_intransitive();
  CHECK(matrix_preference(m, 0, 1) == 1.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(matrix_preference(m, i, i) == 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(matrix_preference(m, j, i) == -matrix_preference(m, i, j));
  CHECK_THROWS_AS(matrix_preference(m, 4, 0), std::out_of_range);
}

TEST_CASE("matrix JSON round trip") {
  CounterRng rng(1);
  const auto m = random_antisymmetric(5, rng);
  CHECK(PreferenceMatrix::from_json(m.to_json()) == m);
  CHECK(PreferenceMatrix::from_json(nlohmann::json::parse(R"({"n":2,"entries":[[0,0.5],[-0.5,0]]})"))(0, 1) == 0.5);
  CHECK_THROWS(PreferenceMatrix::from_json(nlohmann::json::parse(R"({"n":3,"entries":[[0,0.5],[-0.5,0]]})")));
}

TEST_CASE("gap condition matrix isolates option zero") {
  const auto m = gap_condition_matrix(6, 0.4);
  for (std::size_t j = 1; j < 6; ++j) CHECK(m(0, j) == 0.4);
  for (std::size_t i = 1; i < 6; ++i)
    for (std::size_t j = 1; j < 6; ++j) CHECK(std::abs(m(i, j)) <= 0.4);
  const auto mw = game::exact_minimax_winner(m);
  CHECK(mw.strategy.probs[0] == Approx(1.0));
}

TEST_CASE("max-reward preference") {
  const auto hi = with_rewards({4, 6});
  const auto lo = with_rewards({1, 2});
  CHECK(max_reward_preference(hi, lo) == 1.0);
  CHECK(max_reward_preference(lo, hi) == -1.0);
  CHECK(max_reward_preference(hi, with_rewards({5, 5})) == 0.0);
  CHECK(max_reward_preference(hi, hi) == 0.0);
  Trajectory bare;
  bare.steps = {{0, 0}};
  CHECK_THROWS_AS(max_reward_preference(bare, hi), std::logic_error);
}

TEST_CASE("max-reward preference depends only on the order of returns") {
  CounterRng rng(9);
  for (int k = 0; k < 200; ++k) {
    const double a = 10 * rng.uniform() - 5, b = 10 * rng.uniform() - 5;
    const auto f = [](double x) { return std::exp(x) + x * x * x; };  // strictly increasing
    CHECK(max_reward_preference(with_rewards({a}), with_rewards({b})) ==
          max_reward_preference(with_rewards({f(a)}), with_rewards({f(b)})));
  }
}

TEST_CASE("noisy preference") {
  auto base = std::make_shared<MaxRewardOracle>();
  const auto x = with_rewards({1}), y = with_rewards({0});
  NoisyPreference never(base, {0.0, 1});
  NoisyPreference always(base, {1.0, 1});
  for (int i = 0; i < 50; ++i) {
    CHECK(never.compare(x, y) == 1.0);
    CHECK(always.compare(x, y) == -1.0);
  }
  CHECK(always.draws() == 50);
  CHECK_THROWS_AS(NoisyPreference(base, {1.5, 0}), std::invalid_argument);

  const double eps = 0.3;
  NoisyPreference noisy(base, {eps, 77});
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += noisy.compare(x, y);
  const double mean = sum / n;
  const double expected = 1.0 - 2.0 * eps;
  const double se = std::sqrt((1.0 - expected * expected) / n);
  CHECK(std::abs(mean - expected) <= 3.0 * se);

  NoisyPreference r1(base, {eps, 5}), r2(base, {eps, 5});
  for (int i = 0; i < 1000; ++i) REQUIRE(r1.compare(x, y) == r2.compare(x, y));
}

TEST_CASE("non-Markovian preference orders feasibility first") {
  const NonMarkovSpec spec{1.0, 0.75};
  CHECK(spec.tail_begin(8) == 6);
  CHECK(spec.tail_begin(6) == 4);
  const auto feasibleLow = with_rewards({0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5});  // tail 1
  const auto feasibleHigh = with_rewards({1, 1, 1, 1, 1, 1, 1, 0});         // tail 1
  const auto infeasible = with_rewards({1, 1, 1, 1, 1, 1, 1, 1});           // tail 2
  const auto lessInfeasible = with_rewards({0, 0, 0, 0, 0, 0, 1, 0.5});     // tail 1.5
  CHECK(nonmarkov_preference(feasibleLow, infeasible, spec) == 1.0);
  CHECK(nonmarkov_preference(infeasible, feasibleLow, spec) == -1.0);
  CHECK(nonmarkov_preference(feasibleHigh, feasibleLow, spec) == 1.0);
  CHECK(nonmarkov_preference(lessInfeasible, infeasible, spec) == 1.0);
  CHECK(nonmarkov_preference(infeasible, infeasible, spec) == 0.0);
  CHECK_THROWS_AS(NonMarkovOracle(NonMarkovSpec{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("geometric preference") {
  const double pi = std::numbers::pi;
  const GeometricParams params;
  SECTION("both radii above threshold: only the angular term matters") {
    const auto p = GeometricEndpoint::from_polar(15, 0.0);
    const auto q = GeometricEndpoint::from_polar(15, pi);
    CHECK(geometric_preference(p, q, params) == 0.0);
    const auto ahead = GeometricEndpoint::from_polar(15, pi / 8);
    // ahead sits inside p's forward slice: 0.3 * 1 + 0.7 * 1 against 0.3 * 1.
    CHECK(geometric_preference(ahead, p, params) == Approx(0.7));
  }
  SECTION("self comparison is zero") {
    const auto p = GeometricEndpoint::from_polar(3, 1.0);
    CHECK(geometric_preference(p, p, params) == 0.0);
  }
  SECTION("eight compass points form a cycle") {
    std::vector<GeometricEndpoint> pts;
    for (int k = 0; k < 8; ++k) pts.push_back(GeometricEndpoint::from_polar(15, k * pi / 4));
    for (int k = 0; k < 8; ++k) {
      const auto& forward = pts[(k + 1) % 8];
      // Direct formula: distance term 1 for both, angular 1 only for the forward neighbour.
      const double raw = 0.3 * 1.0 + 0.7 * 1.0;
      CHECK(geometric_raw_score(forward, pts[k], params) == Approx(raw));
      CHECK(geometric_preference(forward, pts[k], params) == Approx(0.7));
    }
  }
  SECTION("random inputs are antisymmetric") {
    CounterRng rng(4);
    for (int k = 0; k < 1000; ++k) {
      const auto p = GeometricEndpoint::from_polar(20 * rng.uniform(), 2 * pi * rng.uniform());
      const auto q = GeometricEndpoint::from_polar(20 * rng.uniform(), 2 * pi * rng.uniform());
      const double v = geometric_preference(p, q, params);
      REQUIRE(v == -geometric_preference(q, p, params));
      REQUIRE(std::abs(v) <= 1.0);
    }
  }
  CHECK(wrap_angle(-pi / 2) == Approx(3 * pi / 2));
  CHECK(wrap_angle(2 * pi) == 0.0);
  CHECK_THROWS(GeometricEndpoint::from_polar(-1, 0));
  GeometricParams bad;
  bad.angleSlice = 0.0;
  CHECK_THROWS(geometric_preference({}, {}, bad));
}

TEST_CASE("oracles are antisymmetric on random trajectories") {
  CounterRng rng(12);
  MaxRewardOracle maxReward;
  NonMarkovOracle nonMarkov({1.0, 0.75});
  MatrixOracle matrix(subpopulation_matrix({0.5, 0.3, 0.2}));
  for (int k = 0; k < 300; ++k) {
    std::vector<double> ra(8), rb(8);
    for (auto& v : ra) v = 0.5 * static_cast<double>(rng() % 3);
    for (auto& v : rb) v = 0.5 * static_cast<double>(rng() % 3);
    const auto a = with_rewards(ra, static_cast<int>(rng() % 3));
    const auto b = with_rewards(rb, static_cast<int>(rng() % 3));
    for (PreferenceOracle* o : std::initializer_list<PreferenceOracle*>{&maxReward, &nonMarkov, &matrix}) {
      REQUIRE(o->compare(a, b) == -o->compare(b, a));
      REQUIRE(o->compare(a, a) == 0.0);
    }
  }
}
