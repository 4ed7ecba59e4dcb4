#include "spo/game_solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace spo::game {

MixedStrategy MixedStrategy::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("MixedStrategy::uniform: empty support");
  return MixedStrategy(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

MixedStrategy MixedStrategy::pure(std::size_t n, std::size_t i) {
  if (i >= n) throw std::out_of_range("MixedStrategy::pure: index out of range");
  std::vector<double> p(n, 0.0);
  p[i] = 1.0;
  return MixedStrategy(std::move(p));
}

void MixedStrategy::validate(double tol) const {
  if (probs.empty()) throw std::invalid_argument("MixedStrategy: empty");
  double total = 0.0;
  for (double v : probs) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("MixedStrategy: negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > tol) throw std::invalid_argument("MixedStrategy: entries sum to " + std::to_string(total));
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("linf_distance: dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

nlohmann::json GameSolution::to_json() const {
  return {{"strategy", strategy.probs}, {"value", gameValue}, {"exploitability", exploitability}};
}

std::vector<double> payoff_against(const pref::PreferenceMatrix& m, std::span<const double> q) {
  const std::size_t n = m.size();
  if (q.size() != n) throw std::invalid_argument("payoff_against: dimension mismatch");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * q[j];
    out[i] = acc;
  }
  return out;
}

namespace {

bool is_negative(const mpq_class& v) { return sgn(v) < 0; }
bool is_positive(const mpq_class& v) { return sgn(v) > 0; }
double to_double(const mpq_class& v) { return v.get_d(); }

constexpr double kPivotTol = 1e-12;
bool is_negative(double v) { return v < -kPivotTol; }
bool is_positive(double v) { return v > kPivotTol; }
double to_double(double v) { return v; }

// Solves max 1^T y s.t. A y <= 1, y >= 0 for a strictly positive A
// (rows x cols) with a dense tableau and Bland's rule. The slack basis is
// feasible, so no first phase is needed. Returns y and the dual x, read off
// the objective-row coefficients of the slacks.
template <typename T>
void simplex_positive(const std::vector<T>& a, std::size_t rows, std::size_t cols, std::vector<T>& y, std::vector<T>& x) {
  const std::size_t width = cols + rows + 1;  // structural, slack, rhs
  std::vector<T> tab((rows + 1) * width, T(0));
  auto at = [&](std::size_t r, std::size_t c) -> T& { return tab[r * width + c]; };
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) at(i, j) = a[i * cols + j];
    at(i, cols + i) = T(1);
    at(i, width - 1) = T(1);
  }
  for (std::size_t j = 0; j < cols; ++j) at(rows, j) = T(-1);
  std::vector<std::size_t> basis(rows);
  std::iota(basis.begin(), basis.end(), cols);

  const std::size_t maxPivots = 50'000;
  for (std::size_t pivots = 0;; ++pivots) {
    if (pivots == maxPivots) throw std::logic_error("simplex: pivot limit reached");
    std::size_t enter = width;
    for (std::size_t c = 0; c + 1 < width; ++c) {
      if (is_negative(at(rows, c))) {
        enter = c;
        break;
      }
    }
    if (enter == width) break;

    std::size_t leave = rows;
    T bestRatio{};
    for (std::size_t r = 0; r < rows; ++r) {
      if (!is_positive(at(r, enter))) continue;
      T ratio = at(r, width - 1) / at(r, enter);
      if (leave == rows || ratio < bestRatio || (!(bestRatio < ratio) && basis[r] < basis[leave])) {
        leave = r;
        bestRatio = ratio;
      }
    }
    if (leave == rows) throw std::logic_error("simplex: unbounded program");

    const T pivot = at(leave, enter);
    for (std::size_t c = 0; c < width; ++c) at(leave, c) /= pivot;
    for (std::size_t r = 0; r <= rows; ++r) {
      if (r == leave) continue;
      const T factor = at(r, enter);
      if (factor == T(0)) continue;
      for (std::size_t c = 0; c < width; ++c) at(r, c) -= factor * at(leave, c);
    }
    basis[leave] = enter;
  }

  y.assign(cols, T(0));
  for (std::size_t r = 0; r < rows; ++r)
    if (basis[r] < cols) y[basis[r]] = at(r, width - 1);
  x.assign(rows, T(0));
  for (std::size_t i = 0; i < rows; ++i) x[i] = at(rows, cols + i);
}

template <typename T>
LpGameResult solve_zero_sum_impl(std::span<const double> payoff, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || payoff.size() != rows * cols) throw std::invalid_argument("solve_zero_sum: bad dimensions");
  double lo = std::numeric_limits<double>::infinity();
  for (double v : payoff) {
    if (!std::isfinite(v)) throw std::invalid_argument("solve_zero_sum: non-finite payoff");
    lo = std::min(lo, v);
  }
  // Shift so every entry is at least 1; the shift only moves the value.
  const double shift = 1.0 - std::floor(lo);
  std::vector<T> a(payoff.size());
  for (std::size_t k = 0; k < payoff.size(); ++k) a[k] = T(payoff[k]) + T(shift);

  std::vector<T> y, x;
  simplex_positive(a, rows, cols, y, x);
  T total(0);
  for (const auto& v : x) total += v;
  if (!is_positive(total)) throw std::logic_error("solve_zero_sum: degenerate dual");

  LpGameResult out;
  out.rowStrategy.resize(rows);
  out.colStrategy.resize(cols);
  for (std::size_t i = 0; i < rows; ++i) out.rowStrategy[i] = to_double(T(x[i] / total));
  for (std::size_t j = 0; j < cols; ++j) out.colStrategy[j] = to_double(T(y[j] / total));
  out.value = to_double(T(T(1) / total - T(shift)));
  return out;
}

}  // namespace

LpGameResult solve_zero_sum_exact(std::span<const double> payoff, std::size_t rows, std::size_t cols) {
  return solve_zero_sum_impl<mpq_class>(payoff, rows, cols);
}

LpGameResult solve_zero_sum_double(std::span<const double> payoff, std::size_t rows, std::size_t cols) {
  return solve_zero_sum_impl<double>(payoff, rows, cols);
}

GameSolution exact_minimax_winner(const pref::PreferenceMatrix& m) {
  const std::size_t n = m.size();
  if (n == 0) throw std::invalid_argument("exact_minimax_winner: empty game");
  std::vector<double> payoff(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) payoff[i * n + j] = m(i, j);
  const LpGameResult lp = n <= kExactSolveLimit ? solve_zero_sum_exact(payoff, n, n) : solve_zero_sum_double(payoff, n, n);

  GameSolution sol;
  sol.strategy = MixedStrategy(lp.rowStrategy);
  sol.gameValue = lp.value;
  sol.exploitability = exploitability(m, sol.strategy);
  if (std::abs(sol.gameValue) > 1e-8) {
    throw std::logic_error("exact_minimax_winner: nonzero value " + std::to_string(sol.gameValue) + " for an antisymmetric game");
  }
  return sol;
}

std::vector<std::size_t> copeland_winners(const pref::PreferenceMatrix& m) {
  const std::size_t n = m.size();
  std::vector<double> sums(n, 0.0);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sums[i] += m(i, j);
    scale = std::max(scale, std::abs(sums[i]));
  }
  std::vector<std::size_t> winners;
  if (n == 0) return winners;
  const double best = *std::max_element(sums.begin(), sums.end());
  const double tol = 1e-12 * scale;
  for (std::size_t i = 0; i < n; ++i)
    if (sums[i] >= best - tol) winners.push_back(i);
  return winners;
}

double exploitability(const pref::PreferenceMatrix& m, const MixedStrategy& p) {
  const std::size_t n = m.size();
  if (p.size() != n) throw std::invalid_argument("exploitability: dimension mismatch");
  double bestRow = -std::numeric_limits<double>::infinity();
  double worstCol = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double rowPayoff = 0.0;  // (P p)_i
    double colPayoff = 0.0;  // (p^T P)_i
    for (std::size_t j = 0; j < n; ++j) {
      rowPayoff += m(i, j) * p[j];
      colPayoff += p[j] * m(j, i);
    }
    bestRow = std::max(bestRow, rowPayoff);
    worstCol = std::min(worstCol, colPayoff);
  }
  return std::max(0.0, bestRow - worstCol);
}

MixedStrategy collapse_distribution(std::span<const MixedStrategy> policies, const MixedStrategy& weights) {
  if (policies.empty()) throw std::invalid_argument("collapse_distribution: empty policy list");
  if (weights.size() != policies.size()) throw std::invalid_argument("collapse_distribution: weight count mismatch");
  weights.validate();
  const std::size_t n = policies.front().size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < policies.size(); ++k) {
    if (policies[k].size() != n) throw std::invalid_argument("collapse_distribution: policies differ in support");
    for (std::size_t a = 0; a < n; ++a) out[a] += weights[k] * policies[k][a];
  }
  return MixedStrategy(std::move(out));
}

}  // namespace spo::game
