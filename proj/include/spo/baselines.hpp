#pragma once

// Reward-model comparators: Bradley-Terry fitting, the closed-form RLHF and
// DPO solutions on a finite option set, and an iterative reward-model loop
// that shares the policy improvement step of the practical self-play loop.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spo/envs.hpp"
#include "spo/game_solve.hpp"
#include "spo/practical.hpp"
#include "spo/pref_core.hpp"

namespace spo::base {

/// Sparse (index, value) feature vector.
using SparseFeatures = std::vector<std::pair<std::uint32_t, double>>;

struct Comparison {
  SparseFeatures first;
  SparseFeatures second;
  double label = 1.0;  // Pr(first preferred over second), in [0, 1]
};

/// Scores per option (states = 1) or per (s, a), flat index s * actions + a.
struct RewardTable {
  std::size_t states = 1;
  std::size_t actions = 0;
  std::vector<double> values;

  static RewardTable zeros(std::size_t states, std::size_t actions);
  std::size_t size() const noexcept { return values.size(); }
  double at(std::size_t s, std::size_t a) const { return values.at(s * actions + a); }
  double score(const SparseFeatures& f) const;
  /// Throws std::domain_error on shape mismatch or non-finite entries.
  void validate() const;

  nlohmann::json to_json() const;
  static RewardTable from_json(const nlohmann::json& doc);
};

struct BTFitConfig {
  double learningRate = 1.0;  // initial and maximum step of the line search
  std::size_t epochs = 200;
  /// Comparisons collected per reward-model update in the iterative loop.
  std::size_t batchSize = 64;
  double regularization = 0.0;
  std::uint64_t seed = 0;
  void validate() const;
};

struct BTFitResult {
  RewardTable table;
  std::vector<double> lossHistory;  // objective before the first and after every epoch
};

/// Mean logistic loss of the comparisons plus lambda * ||r||^2.
double bradley_terry_loss(const RewardTable& r, std::span<const Comparison> data, double regularization);

/// Full-batch gradient descent with Armijo backtracking, starting from
/// `init`. Throws std::runtime_error on a non-finite objective.
BTFitResult fit_bradley_terry(std::span<const Comparison> data, const BTFitConfig& cfg, RewardTable init);

/// One-hot option features.
SparseFeatures option_features(std::size_t option);
/// Visit counts of every (s, a) along the trajectory.
SparseFeatures trajectory_features(const pref::Trajectory& xi, std::size_t actions);

/// pi(y) proportional to pi_ref(y) exp(r(y) / beta) over a single-state table.
game::MixedStrategy soft_opt_policy(const RewardTable& r, const game::MixedStrategy& ref, double beta);

struct DpoAnalysisConfig {
  double beta = 1.0;
  game::MixedStrategy referencePolicy;
  void validate() const;
};

/// -sum over ordered pairs y1 != y2 of Pr(y1 > y2) log sigma(beta (log(pi/pi_ref)(y1) - log(pi/pi_ref)(y2))).
/// Throws std::domain_error on zero-probability entries.
double dpo_loss_value(const pref::PreferenceMatrix& m, const game::MixedStrategy& pi, const DpoAnalysisConfig& cfg);
/// Number of unordered pairs; each contributes log 2 at pi = pi_ref.
std::size_t dpo_term_count(const pref::PreferenceMatrix& m);

struct GridMinimum {
  game::MixedStrategy argmin;
  double loss = 0.0;
};

/// Exhaustive search over the interior grid of the 3-simplex at `resolution`.
GridMinimum dpo_grid_search(const pref::PreferenceMatrix& m, const DpoAnalysisConfig& cfg, double resolution = 0.005);

struct DpoRow {
  double beta = 0.0;
  double lossReference = 0.0;
  double lossMinimaxWinner = 0.0;
  double argminDistance = 0.0;  // L1 from the grid minimizer to the minimax winner
};

/// Uniform reference, one row per beta.
std::vector<DpoRow> dpo_analysis(const pref::PreferenceMatrix& m, std::span<const double> betas, double resolution = 0.005);
std::string dpo_csv(std::span<const DpoRow> rows);

/// Closed-form RLHF on a finite option set: fit Bradley-Terry on every
/// ordered pair with its exact win probability, then soft-optimize.
struct RlhfSolution {
  RewardTable reward;
  game::MixedStrategy policy;
  /// Options whose fitted reward is within 1e-6 of the maximum.
  std::vector<std::size_t> topOptions;
};
RlhfSolution rlhf_closed_form(const pref::PreferenceMatrix& m, double beta, const BTFitConfig& fit);

// ---------------------------------------------------------------------------
// Iterative reward-model baseline

struct RmConfig {
  BTFitConfig fit;
  std::size_t refitEvery = 16;
  std::size_t replayCapacity = 0;     // 0 keeps every trajectory
  std::size_t comparisonWindow = 4096;  // most recent comparisons used per fit, 0 keeps all
  double rewardClip = 5.0;
  void validate() const;
};

/// Labels each step with the fitted r(s_h, a_h). Every `refitEvery` labels it
/// queries fit.batchSize comparisons between random replay entries and refits
/// from the previous table.
class RewardModelLabeler final : public practical::RewardLabeler {
 public:
  RewardModelLabeler(const env::TabularMDP& mdp, pref::OraclePtr oracle, RmConfig cfg);
  void warm_up(std::span<const pref::Trajectory> initial, CounterRng& rng) override;
  std::vector<double> label(const pref::Trajectory& xi, CounterRng& rng) override;
  std::size_t queries() const override { return queries_; }
  std::string name() const override { return "rm-bradley-terry"; }

  const RewardTable& table() const noexcept { return table_; }
  std::size_t refits() const noexcept { return refits_; }

 private:
  void refit(CounterRng& rng);

  std::size_t actions_;
  pref::OraclePtr oracle_;
  RmConfig cfg_;
  std::deque<pref::Trajectory> replay_;
  std::deque<Comparison> data_;
  RewardTable table_;
  std::size_t calls_ = 0;
  std::size_t refits_ = 0;
  std::size_t queries_ = 0;
};

practical::PracticalRun run_iterative_rm(const env::TabularMDP& mdp, pref::OraclePtr oracle, const RmConfig& rm,
                                         practical::PracticalConfig cfg, const practical::IterationFn& onIteration = {});

}  // namespace spo::base
