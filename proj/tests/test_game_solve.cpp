#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "spo/game_solve.hpp"

using namespace spo;
using namespace spo::game;
using Catch::Approx;

namespace {

pref::PreferenceMatrix random_antisymmetric(std::size_t n, CounterRng& rng) {
  pref::PreferenceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, 2.0 * rng.uniform() - 1.0);
  return m;
}

/// Best pure response value against p, computed by direct summation.
double best_response_value(const pref::PreferenceMatrix& m, std::span<const double> p) {
  double best = -1e300;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) v += m(i, j) * p[j];
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

TEST_CASE("mixed strategy validation") {
  CHECK_NOTHROW(MixedStrategy::uniform(4).validate());
  CHECK(MixedStrategy::pure(3, 1).probs == std::vector<double>{0, 1, 0});
  CHECK_THROWS_AS(MixedStrategy({0.5, 0.6}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(MixedStrategy({1.5, -0.5}).validate(), std::invalid_argument);
}

TEST_CASE("minimax winner of subpopulation matrices is the weight vector") {
  CounterRng rng(2024);
  for (int k = 0; k < 50; ++k) {
    double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    const double s = a + b + c;
    a /= s;
    b /= s;
    c = 1.0 - a - b;
    const auto sol = exact_minimax_winner(pref::subpopulation_matrix({a, b, c}));
    const std::vector<double> expected{a, b, c};
    REQUIRE(linf_distance(sol.strategy.view(), expected) <= 1e-8);
  }
}

TEST_CASE("minimax winner of the three-option counterexample") {
  const auto sol = exact_minimax_winner(pref::rlhf_counterexample());
  CHECK(sol.strategy[0] == Approx(5.0 / 12).margin(1e-12));
  CHECK(sol.strategy[1] == Approx(5.0 / 12).margin(1e-12));
  CHECK(sol.strategy[2] == Approx(1.0 / 6).margin(1e-12));
  CHECK(std::abs(sol.gameValue) <= 1e-12);
}

TEST_CASE("minimax winner of the four-option intransitive matrix") {
  const auto sol = exact_minimax_winner(pref::four_option_intransitive());
  const std::vector<double> expected{1.0 / 3, 0.0, 1.0 / 3, 1.0 / 3};
  CHECK(linf_distance(sol.strategy.view(), expected) <= 1e-12);
  CHECK(sol.gameValue == 0.0);
}

TEST_CASE("copeland winners") {
  CHECK(copeland_winners(pref::four_option_intransitive()) == std::vector<std::size_t>{0, 3});
  CHECK(copeland_winners(pref::rlhf_counterexample()) == std::vector<std::size_t>{1});
  CHECK(copeland_winners(pref::PreferenceMatrix(4)) == std::vector<std::size_t>{0, 1, 2, 3});
  CounterRng rng(8);
  for (int k = 0; k < 20; ++k) {
    const auto m = random_antisymmetric(6, rng);
    CHECK(copeland_winners(m) == copeland_winners(m.scaled(0.37)));
  }
}

TEST_CASE("exploitability") {
  const auto rps = pref::rock_paper_scissors();
  CHECK(exploitability(rps, MixedStrategy::uniform(3)) == 0.0);
  CHECK(exploitability(rps, MixedStrategy::pure(3, 0)) == Approx(2.0));
  CHECK_THROWS(exploitability(rps, MixedStrategy::uniform(4)));
  CounterRng rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto m = random_antisymmetric(5, rng);
    std::vector<double> p(5);
    double s = 0.0;
    for (auto& v : p) s += (v = rng.uniform());
    for (auto& v : p) v /= s;
    CHECK(exploitability(m, MixedStrategy(p)) == Approx(2.0 * best_response_value(m, p)).margin(1e-14));
  }
}

TEST_CASE("random antisymmetric games have value zero and unexploitable solutions") {
  CounterRng rng(99);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + k % 9;
    const auto m = random_antisymmetric(n, rng);
    const auto sol = exact_minimax_winner(m);
    REQUIRE_NOTHROW(sol.strategy.validate());
    REQUIRE(std::abs(sol.gameValue) <= 1e-8);
    // No pure strategy gains against p*.
    REQUIRE(best_response_value(m, sol.strategy.view()) <= 1e-8);
    REQUIRE(exploitability(m, sol.strategy) <= 1e-8);
  }
}

TEST_CASE("exact and floating-point solvers agree") {
  CounterRng rng(5);
  for (int k = 0; k < 30; ++k) {
    const std::size_t rows = 2 + k % 4, cols = 2 + (k / 4) % 4;
    std::vector<double> payoff(rows * cols);
    for (auto& v : payoff) v = 2 * rng.uniform() - 1;
    const auto exact = solve_zero_sum_exact(payoff, rows, cols);
    const auto dbl = solve_zero_sum_double(payoff, rows, cols);
    CHECK(exact.value == Approx(dbl.value).margin(1e-9));
    // The row strategy guarantees the value against every column.
    for (std::size_t j = 0; j < cols; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < rows; ++i) v += exact.rowStrategy[i] * payoff[i * cols + j];
      CHECK(v >= exact.value - 1e-12);
    }
  }
  // Matching pennies.
  const std::vector<double> pennies{1, -1, -1, 1};
  const auto r = solve_zero_sum_exact(pennies, 2, 2);
  CHECK(r.value == 0.0);
  CHECK(r.rowStrategy == std::vector<double>{0.5, 0.5});
}

TEST_CASE("solution JSON carries strategy, value and exploitability") {
  const auto doc = exact_minimax_winner(pref::rock_paper_scissors()).to_json();
  CHECK(doc.at("strategy").size() == 3);
  CHECK(doc.at("value").get<double>() == 0.0);
  CHECK(doc.at("exploitability").get<double>() <= 1e-12);
}

TEST_CASE("collapse of mixed strategies") {
  const std::vector<MixedStrategy> one{MixedStrategy({0.2, 0.8})};
  CHECK(collapse_distribution(one, MixedStrategy({1.0})).probs == std::vector<double>{0.2, 0.8});
  const std::vector<MixedStrategy> two{MixedStrategy::pure(2, 0), MixedStrategy::pure(2, 1)};
  CHECK(collapse_distribution(two, MixedStrategy({0.5, 0.5})).probs == std::vector<double>{0.5, 0.5});
  CHECK_THROWS(collapse_distribution(std::span<const MixedStrategy>{}, MixedStrategy(std::vector<double>{})));
}
