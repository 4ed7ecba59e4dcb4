#pragma once

// Self-play preference optimization in normal form (full and bandit
// feedback), over full histories of a tabular MDP, and per context.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spo/envs.hpp"
#include "spo/learners.hpp"
#include "spo/pref_core.hpp"

namespace spo::sp {

/// -(P p): loss of every pure option against the mixture p.
std::vector<double> spo_loss(const pref::PreferenceMatrix& m, std::span<const double> p);

struct Progress {
  std::size_t t = 0;  // rounds completed
  std::span<const double> current;
  std::span<const double> average;
  double regret = 0.0;
  std::size_t queries = 0;
};
using ProgressFn = std::function<void(const Progress&)>;

struct RunOptions {
  bool keepIterates = false;
  /// Invoke the callback every `recordEvery` rounds (0 disables) and after the last.
  std::size_t recordEvery = 0;
  ProgressFn onProgress;
};

struct SelfPlayRun {
  std::vector<std::vector<double>> iterates;  // filled when keepIterates
  std::vector<double> averageStrategy;
  std::size_t rounds = 0;
  std::size_t queryCount = 0;
  double realizedRegret = 0.0;
};

/// One learner, losses l_t = spo_loss(m, p_t).
SelfPlayRun run_selfplay_fullfeedback(const pref::PreferenceMatrix& m, learn::OnlineLearner& learner, std::size_t T,
                                      const RunOptions& options = {});

/// Two identically constructed learners playing the explicit zero-sum game.
/// Throws std::logic_error the first time p_t and q_t differ in any bit.
std::pair<SelfPlayRun, SelfPlayRun> run_selfplay_dueling_check(const pref::PreferenceMatrix& m,
                                                               const learn::LearnerFactory& factory, std::size_t T);

struct BanditRunConfig {
  std::size_t T = 0;
  double eta = 0.0;    // <= 0 selects HedgeState::default_eta(n, T)
  double gamma = -1.0;  // < 0 selects BanditFeedbackConfig::default_gamma(n, T)
  double alpha = 0.5;
  std::uint64_t seed = 0;
};

/// One sampled comparison per round between two draws of the mixed strategy.
/// The average is taken over the strategies actually played.
SelfPlayRun run_selfplay_bandit(const pref::PreferenceMatrix& m, const BanditRunConfig& cfg, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// History-level self-play on a tabular MDP

enum class GainForm { Advantage, QValue };
enum class QEstimator { Exact, MonteCarlo };

struct TabularSpoConfig {
  std::size_t T = 0;
  double eta = 0.0;  // <= 0 selects HedgeState::default_eta(|A|, T)
  GainForm gain = GainForm::Advantage;
  QEstimator estimator = QEstimator::Exact;
  std::size_t mcSamples = 64;  // opponent rollouts per round for MonteCarlo
  std::uint64_t seed = 0;
  bool keepPolicies = false;
};

struct TabularSpoRun {
  /// Trajectory distribution of the uniform mixture over pi_1..pi_T.
  std::vector<double> mixtureDistribution;
  env::TabularHistoryPolicy finalPolicy;
  std::vector<env::TabularHistoryPolicy> policies;  // pi_1..pi_T when kept
  /// max_t |E_{xi ~ pi_t} r_t(xi)|, zero up to rounding.
  double maxSelfReward = 0.0;
  /// Mean standard error of the sampled rewards (MonteCarlo only).
  double meanRewardStderr = 0.0;
  std::size_t queries = 0;
  double eta = 0.0;
};

/// Dense matrix of P(xi_u, xi_v) over all trajectory ids.
std::vector<double> trajectory_preference_table(const env::TabularMDP& mdp, pref::PreferenceOracle& oracle);

/// Maximum number of trajectories for which the pairwise table is built.
inline constexpr std::uint64_t kMaxTableTrajectories = 4096;

/// Called after round t with the running mixture distribution and pi_{t+1}.
using TabularRoundFn = std::function<void(std::size_t t, std::span<const double> mixture, const env::TabularHistoryPolicy& next)>;

TabularSpoRun run_spo_tabular(const env::TabularMDP& mdp, pref::PreferenceOracle& oracle, const TabularSpoConfig& cfg,
                              const TabularRoundFn& onRound = {});

/// max_pi P(pi, d) - min_pi P(d, pi) over history policies, i.e. twice the
/// best-response value against the trajectory distribution d.
double sequential_duality_gap(const env::TabularMDP& mdp, std::span<const double> table, std::span<const double> dist);

/// 8 H sqrt(ln |A| / T).
double sequential_gap_bound(std::size_t horizon, std::size_t actions, std::size_t T);

// ---------------------------------------------------------------------------
// Contextual self-play

struct ContextualConfig {
  std::size_t k = 2;
  std::size_t T = 0;
  double eta = 0.0;     // <= 0 selects the default rate for the largest arm set
  double gamma = -1.0;  // < 0 selects the default mixing for the largest arm set
  std::uint64_t seed = 0;
};

struct ContextualRun {
  std::vector<std::vector<double>> finalStrategies;
  std::vector<std::vector<double>> averageStrategies;  // over rounds where the context was drawn
  std::vector<std::size_t> visits;
  std::size_t queries = 0;
};

/// Importance-weighted k-sample gain: sum_i 1[y_i = y] r(y_i) / (k pi(y)),
/// where r(y_i) is the mean preference of y_i over the other k - 1 samples.
std::vector<double> contextual_gain_estimate(std::span<const double> played, std::span<const std::size_t> samples,
                                             std::span<const double> sampleRewards);

ContextualRun run_spo_contextual(const env::ContextualBandit& cb, const ContextualConfig& cfg);

}  // namespace spo::sp
