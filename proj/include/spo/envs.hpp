#pragma once

// Finite-horizon tabular environments, full-history indexing, per-history
// policies and exact trajectory enumeration.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spo/game_solve.hpp"
#include "spo/pref_core.hpp"
#include "spo/rng.hpp"

namespace spo::env {

using pref::Step;
using pref::Trajectory;

struct Outcome {
  int state = 0;
  double prob = 0.0;
};

/// Reward-free MDP <S, A, T, H> with an optional ground-truth reward r(s, a).
class TabularMDP {
 public:
  TabularMDP() = default;
  TabularMDP(std::size_t nStates, std::size_t nActions, std::size_t horizon);

  std::size_t states() const noexcept { return nStates_; }
  std::size_t actions() const noexcept { return nActions_; }
  std::size_t horizon() const noexcept { return horizon_; }

  /// Replaces the outcome list of (s, a). Zero-probability outcomes are dropped.
  void set_transition(std::size_t s, std::size_t a, std::vector<Outcome> outcomes);
  void set_deterministic(std::size_t s, std::size_t a, std::size_t next);
  std::span<const Outcome> next(std::size_t s, std::size_t a) const { return next_[s * nActions_ + a]; }

  void set_initial(std::vector<double> initial);
  const std::vector<double>& initial() const noexcept { return initial_; }

  void set_reward(std::vector<double> reward);  // s * A + a
  bool has_reward() const noexcept { return reward_.has_value(); }
  double reward(std::size_t s, std::size_t a) const;

  /// Row sums within 1e-12, indices in range, initial distribution valid.
  void validate() const;

  /// {states, actions, horizon, transitions [s][a][s'], initial, reward? [s][a]}
  static TabularMDP from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

 private:
  std::size_t nStates_ = 0;
  std::size_t nActions_ = 0;
  std::size_t horizon_ = 0;
  std::vector<std::vector<Outcome>> next_;
  std::vector<double> initial_;
  std::optional<std::vector<double>> reward_;
};

/// Mixed-radix index of full histories phi_h = (s_0, a_0, ..., s_h): the
/// step-0 index is s_0 and extending by (a, s') maps row to (row A + a) S + s'.
class HistoryCodec {
 public:
  HistoryCodec(std::size_t nStates, std::size_t nActions, std::size_t horizon);

  /// |Phi_h| = S (S A)^h.
  std::uint64_t count(std::size_t h) const { return counts_.at(h); }
  std::uint64_t extend(std::uint64_t row, std::size_t a, std::size_t next) const {
    return (row * nActions_ + a) * nStates_ + next;
  }
  std::size_t state_of(std::uint64_t row) const { return static_cast<std::size_t>(row % nStates_); }

  std::uint64_t encode(std::span<const Step> prefix, std::size_t current) const;
  std::pair<std::vector<Step>, std::size_t> decode(std::size_t h, std::uint64_t row) const;

  /// |Xi| = (S A)^H; the id of a trajectory is row_{H-1} A + a_{H-1}.
  std::uint64_t trajectory_count() const { return trajectoryCount_; }
  std::uint64_t trajectory_id(std::uint64_t lastRow, std::size_t a) const { return lastRow * nActions_ + a; }
  std::uint64_t trajectory_id(const Trajectory& t) const;
  std::vector<Step> decode_trajectory(std::uint64_t id) const;

 private:
  std::size_t nStates_, nActions_, horizon_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t trajectoryCount_ = 0;
};

enum class PolicyMode { Full, Markov };

/// Per-step action distributions, indexed by full history (Full) or by the
/// current state only (Markov).
class TabularHistoryPolicy {
 public:
  TabularHistoryPolicy() = default;
  static TabularHistoryPolicy uniform(const TabularMDP& mdp, PolicyMode mode);

  PolicyMode mode() const noexcept { return mode_; }
  std::size_t horizon() const noexcept { return tables_.size(); }
  std::size_t actions() const noexcept { return nActions_; }
  std::size_t states() const noexcept { return nStates_; }
  std::size_t rows(std::size_t h) const { return tables_.at(h).size() / nActions_; }
  /// Table row used at step h for full-history index `history`.
  std::uint64_t row_of(std::uint64_t history) const { return mode_ == PolicyMode::Full ? history : history % nStates_; }

  std::span<const double> probs(std::size_t h, std::uint64_t row) const {
    return {tables_[h].data() + row * nActions_, nActions_};
  }
  std::span<double> mutable_probs(std::size_t h, std::uint64_t row) { return {tables_[h].data() + row * nActions_, nActions_}; }
  void set(std::size_t h, std::uint64_t row, std::span<const double> dist);

  void validate(double tol = 1e-9) const;

  nlohmann::json to_json() const;
  static TabularHistoryPolicy from_json(const nlohmann::json& doc);

  friend bool operator==(const TabularHistoryPolicy&, const TabularHistoryPolicy&) = default;

 private:
  PolicyMode mode_ = PolicyMode::Markov;
  std::size_t nStates_ = 0;
  std::size_t nActions_ = 0;
  std::vector<std::vector<double>> tables_;
};

/// Total number of full-history rows over all steps; the Full-mode table size guard.
inline constexpr std::uint64_t kMaxHistoryRows = 10'000'000;
/// Guard on the number of trajectories an exact enumeration may visit.
inline constexpr std::uint64_t kMaxTrajectories = 1'000'000;

Trajectory make_trajectory(const TabularMDP& mdp, std::vector<Step> steps);

Trajectory rollout(const TabularMDP& mdp, const TabularHistoryPolicy& policy, CounterRng& rng);
Trajectory rollout(const TabularMDP& mdp, const TabularHistoryPolicy& policy, std::uint64_t seed);

/// Dense probability over trajectory ids (see HistoryCodec).
std::vector<double> enumerate_trajectory_distribution(const TabularMDP& mdp, const TabularHistoryPolicy& policy);

/// Ids with positive probability, ascending.
std::vector<std::uint64_t> support_of(std::span<const double> dist);

/// Exact E_{xi1 ~ d1, xi2 ~ d2} P(xi1, xi2), evaluated as a sum over unordered
/// pairs so that swapping the arguments negates the result exactly.
double distribution_preference(const TabularMDP& mdp, std::span<const double> d1, std::span<const double> d2,
                               pref::PreferenceOracle& oracle);

double policy_preference(const TabularMDP& mdp, const TabularHistoryPolicy& pi1, const TabularHistoryPolicy& pi2,
                         pref::PreferenceOracle& oracle);

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Monte-Carlo form with an explicit sample budget.
Estimate policy_preference_mc(const TabularMDP& mdp, const TabularHistoryPolicy& pi1, const TabularHistoryPolicy& pi2,
                              pref::PreferenceOracle& oracle, std::size_t samples, std::uint64_t seed);

/// H copies of R / H.
std::vector<double> split_trajectory_reward(const Trajectory& xi, double total);

/// Backward induction over full histories for a trajectory-level value.
struct HistoryDP {
  std::vector<std::vector<double>> value;                  // V_h(row)
  std::vector<std::vector<double>> q;                      // Q_h flat, [row * A + a]
  std::vector<std::vector<std::uint32_t>> optimalActions;  // bitmask per (h, row)
  double optimum = 0.0;                                    // E_{s0}[V_0]
};

HistoryDP history_dp(const TabularMDP& mdp, std::span<const double> terminalValue, double tieTol = 1e-9);

/// A deterministic Full-mode policy choosing the lowest optimal action.
TabularHistoryPolicy greedy_history_policy(const TabularMDP& mdp, const HistoryDP& dp);

/// Sum over trajectories of d(xi) v(xi).
double expected_value(std::span<const double> dist, std::span<const double> values);

/// Single Full-mode policy whose trajectory distribution is the weighted
/// mixture of the components'.
TabularHistoryPolicy collapse_tabular(const TabularMDP& mdp, std::span<const TabularHistoryPolicy> policies,
                                      const game::MixedStrategy& weights);

/// State distribution at every step under a Markov policy.
std::vector<std::vector<double>> markov_occupancy(const TabularMDP& mdp, const TabularHistoryPolicy& policy);

/// Expected ground-truth reward collected at steps [begin, end).
double expected_reward(const TabularMDP& mdp, const TabularHistoryPolicy& policy, std::size_t begin, std::size_t end);

/// Optimal expected ground-truth return over Markov (time-indexed) policies.
double optimal_markov_return(const TabularMDP& mdp);

// ---------------------------------------------------------------------------
// Contextual bandit

class ContextualBandit {
 public:
  ContextualBandit(std::vector<double> contextDistribution, std::vector<pref::PreferenceMatrix> games);

  std::size_t contexts() const noexcept { return games_.size(); }
  std::size_t arms(std::size_t x) const { return games_.at(x).size(); }
  const std::vector<double>& context_distribution() const noexcept { return rho_; }
  const pref::PreferenceMatrix& game(std::size_t x) const { return games_.at(x); }
  double preference(std::size_t x, std::size_t y1, std::size_t y2) const { return games_.at(x).at(y1, y2); }

 private:
  std::vector<double> rho_;
  std::vector<pref::PreferenceMatrix> games_;
};

// ---------------------------------------------------------------------------
// Point navigation

struct PointNavSpec {
  int halfWidth = 12;
  std::size_t horizon = 12;
};

/// Lattice [-L, L]^2 starting at the origin; actions are the 8 king moves in
/// counter-clockwise order from east. Moves that would leave the lattice stay.
TabularMDP make_pointnav(const PointNavSpec& spec = {});
std::pair<int, int> pointnav_position(const PointNavSpec& spec, int state);
int pointnav_state(const PointNavSpec& spec, int x, int y);
std::pair<int, int> pointnav_displacement(int action);
/// Position after the final action.
std::pair<int, int> pointnav_final_position(const PointNavSpec& spec, const Trajectory& t);
pref::GeometricEndpoint pointnav_endpoint(const PointNavSpec& spec, const Trajectory& t);
/// Octant index 0..7 of an angle in [0, 2 pi).
std::size_t octant_of(double angle);

// ---------------------------------------------------------------------------
// Built-in instances

std::vector<std::string> builtin_ids();
TabularMDP builtin_mdp(const std::string& id);

/// Harvest task: one state, actions rest/light/work worth 0, 0.5, 1.
inline constexpr std::size_t kHarvestHorizon = 8;
/// Return of repeating "light" forever, the best stationary policy that keeps
/// the tail constraint.
inline constexpr double kHarvestMyopicReturn = 4.0;

/// (sum of actions + sum of states) mod 3 for the intransitive chain.
std::size_t intransitive_chain_class(const Trajectory& t);

}  // namespace spo::env
