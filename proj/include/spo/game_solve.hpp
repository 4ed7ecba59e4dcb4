#pragma once

// Exact and reference computations on finite preference games: minimax
// winners, Copeland winners, exploitability and mixture collapse.

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "spo/pref_core.hpp"

namespace spo::game {

/// Probability vector over a finite option set.
struct MixedStrategy {
  std::vector<double> probs;

  MixedStrategy() = default;
  explicit MixedStrategy(std::vector<double> p) : probs(std::move(p)) {}

  static MixedStrategy uniform(std::size_t n);
  static MixedStrategy pure(std::size_t n, std::size_t i);

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t i) const noexcept { return probs[i]; }
  std::span<const double> view() const noexcept { return probs; }

  /// Throws std::invalid_argument unless entries are >= 0 and sum to 1 within tol.
  void validate(double tol = 1e-9) const;

  friend bool operator==(const MixedStrategy&, const MixedStrategy&) = default;
};

double l1_distance(std::span<const double> a, std::span<const double> b);
double linf_distance(std::span<const double> a, std::span<const double> b);

struct GameSolution {
  MixedStrategy strategy;
  double gameValue = 0.0;
  double exploitability = 0.0;

  nlohmann::json to_json() const;
};

/// (P q)_i for every i.
std::vector<double> payoff_against(const pref::PreferenceMatrix& m, std::span<const double> q);

/// Minimax winner by linear programming. Games with n <= kExactSolveLimit
/// pivot on exact rationals; larger ones pivot in double precision.
GameSolution exact_minimax_winner(const pref::PreferenceMatrix& m);

inline constexpr std::size_t kExactSolveLimit = 12;

/// Row player strategy of the zero-sum game with arbitrary payoff matrix
/// `payoff` (row-major, rows x cols), together with the game value.
struct LpGameResult {
  std::vector<double> rowStrategy;
  std::vector<double> colStrategy;
  double value = 0.0;
};
LpGameResult solve_zero_sum_exact(std::span<const double> payoff, std::size_t rows, std::size_t cols);
LpGameResult solve_zero_sum_double(std::span<const double> payoff, std::size_t rows, std::size_t cols);

/// All argmax indices of the row sums.
std::vector<std::size_t> copeland_winners(const pref::PreferenceMatrix& m);

/// max_{p*} p*^T P p - min_{q*} p^T P q*. Zero iff p is a minimax winner.
double exploitability(const pref::PreferenceMatrix& m, const MixedStrategy& p);

/// Weighted mixture of action distributions: the single policy whose outcome
/// distribution is the mixture of the components'.
MixedStrategy collapse_distribution(std::span<const MixedStrategy> policies, const MixedStrategy& weights);

}  // namespace spo::game
