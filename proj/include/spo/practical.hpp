#pragma once

// Queue-based practical self-play: one rollout, one reward label and one
// soft policy improvement step per iteration, with pluggable reward sources.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spo/envs.hpp"
#include "spo/pref_core.hpp"
#include "spo/rng.hpp"

namespace spo::practical {

using pref::Trajectory;

/// Source of per-step rewards for freshly sampled trajectories.
class RewardLabeler {
 public:
  virtual ~RewardLabeler() = default;
  /// Receives the rollouts of the initial policy before any update.
  virtual void warm_up(std::span<const Trajectory> initial, CounterRng& rng) = 0;
  virtual std::vector<double> label(const Trajectory& xi, CounterRng& rng) = 0;
  virtual std::size_t queries() const = 0;
  virtual std::string name() const = 0;
};

/// FIFO of the most recent B trajectories.
class TrajectoryQueue {
 public:
  explicit TrajectoryQueue(std::size_t capacity);
  void push(Trajectory xi);
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool full() const noexcept { return entries_.size() == capacity_; }
  const std::deque<Trajectory>& entries() const noexcept { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Trajectory> entries_;
};

/// Win rate of the new trajectory over the queue, split evenly over steps.
/// The trajectory joins the queue after it is scored.
class QueueWinRateLabeler final : public RewardLabeler {
 public:
  QueueWinRateLabeler(pref::OraclePtr oracle, std::size_t queueSize);
  void warm_up(std::span<const Trajectory> initial, CounterRng& rng) override;
  std::vector<double> label(const Trajectory& xi, CounterRng& rng) override;
  std::size_t queries() const override { return queries_; }
  std::string name() const override { return "spo-queue"; }
  const TrajectoryQueue& queue() const noexcept { return queue_; }

 private:
  pref::OraclePtr oracle_;
  TrajectoryQueue queue_;
  std::size_t queries_ = 0;
};

struct ImproverConfig {
  double stepSize = 1.0;    // eta in logits += eta * A
  double rewardRate = 0.1;  // rho in the running reward estimate
  /// tau: logits <- (1 - eta tau) logits + eta A, a pull toward uniform.
  double entropy = 0.0;
  /// When set, every entry moves toward the importance-weighted sample
  /// 1[visited] r / (d_h(s) pi_h(a|s)), so unvisited entries decay as well.
  bool importanceWeighted = true;
  /// Upper bound on 1 / (d_h(s) pi_h(a|s)).
  double weightCap = 100.0;
  void validate() const;
};

/// Time-indexed Markov policy improved by exponentiated advantages computed
/// exactly from a running per-(h, s, a) reward estimate and known dynamics.
class SoftPolicyImprover {
 public:
  SoftPolicyImprover(const env::TabularMDP& mdp, ImproverConfig cfg);

  /// Running reward estimate update from a trajectory of the current policy:
  /// r(h, s_h, a_h) <- (1 - rho) r + rho * stepRewards[h], or the
  /// importance-weighted form over all entries.
  void observe(const Trajectory& xi, std::span<const double> stepRewards);
  /// One soft policy iteration step on every (h, s).
  void improve();

  const env::TabularHistoryPolicy& policy() const noexcept { return policy_; }
  double reward_estimate(std::size_t h, std::size_t s, std::size_t a) const;

 private:
  const env::TabularMDP* mdp_;
  ImproverConfig cfg_;
  env::TabularHistoryPolicy policy_;
  std::vector<double> logits_;  // [(h * S + s) * A + a]
  std::vector<double> reward_;  // same layout
  std::vector<double> q_, value_, nextValue_;
  std::vector<double> occupancy_;  // [h * S + s]
  std::vector<char> reachable_;    // [h * S + s]; other rows are never updated
};

struct PracticalConfig {
  std::size_t T = 0;
  /// Rollouts from the initial policy fed to warm_up.
  std::size_t warmUp = 0;
  ImproverConfig improver;
  std::size_t checkpointEvery = 0;  // 0 selects max(1, T / 50)
  std::size_t validationSamples = 200;
  std::uint64_t seed = 0;
  void validate() const;
};

struct PracticalRun {
  std::vector<env::TabularHistoryPolicy> checkpoints;
  std::vector<std::size_t> checkpointIterations;
  std::vector<double> checkpointScores;
  std::size_t bestIndex = 0;
  env::TabularHistoryPolicy best;
  /// Mean of pi_t(. | s_0) at step 0 over all iterations and over the last quarter.
  std::vector<double> averageInitialStrategy;
  std::vector<double> tailAverageInitialStrategy;
  std::size_t queries = 0;
};

using IterationFn = std::function<void(std::size_t t, const Trajectory& xi, const env::TabularHistoryPolicy& next)>;

/// The shared loop. `oracle` is used only for checkpoint selection: each
/// checkpoint is scored by mean preference against the uniform mixture of all
/// checkpoints, with common random numbers across checkpoints.
PracticalRun run_practical(const env::TabularMDP& mdp, pref::PreferenceOracle& oracle, RewardLabeler& labeler,
                           const PracticalConfig& cfg, const IterationFn& onIteration = {});

/// run_practical with a QueueWinRateLabeler of size B; warm-up fills the queue.
PracticalRun run_spo_practical(const env::TabularMDP& mdp, pref::OraclePtr oracle, std::size_t queueSize,
                               PracticalConfig cfg, const IterationFn& onIteration = {});

/// Index of the initial state with the largest probability (first on ties).
std::size_t main_initial_state(const env::TabularMDP& mdp);

}  // namespace spo::practical
