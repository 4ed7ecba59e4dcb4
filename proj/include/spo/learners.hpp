#pragma once

// Deterministic no-regret learners over a finite action set, plus the
// helpers that turn bandit feedback into loss vectors.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace spo::learn {

using LossVector = std::vector<double>;

/// Throws std::invalid_argument on non-finite entries. Magnitudes are not
/// bounded here: importance-weighted estimates legitimately exceed 1.
void check_loss(std::span<const double> loss);

/// Tracks sum_t <p_t, l_t> and sum_t l_t for realized regret.
class RegretTracker {
 public:
  explicit RegretTracker(std::size_t n = 0) : perArm_(n, 0.0) {}
  RegretTracker(double learnerLoss, std::vector<double> perArm) : learnerLoss_(learnerLoss), perArm_(std::move(perArm)) {}
  void record(std::span<const double> strategy, std::span<const double> loss);
  double learner_loss() const noexcept { return learnerLoss_; }
  const std::vector<double>& per_arm_loss() const noexcept { return perArm_; }
  /// sum_t <p_t, l_t> - min_i sum_t l_t(i).
  double regret() const;

 private:
  double learnerLoss_ = 0.0;
  std::vector<double> perArm_;
};

/// Interface shared by the full-information learners.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;
  virtual std::size_t size() const = 0;
  virtual std::vector<double> strategy() const = 0;
  virtual void update(std::span<const double> loss) = 0;
  virtual std::size_t rounds() const = 0;
  virtual const RegretTracker& tracker() const = 0;
  virtual std::unique_ptr<OnlineLearner> clone() const = 0;
  virtual std::string name() const = 0;
  double regret() const { return tracker().regret(); }
};

using LearnerFactory = std::function<std::unique_ptr<OnlineLearner>(std::size_t n)>;

enum class EtaSchedule { Fixed, Anytime };

/// Exponential weights stored in log space.
class HedgeState final : public OnlineLearner {
 public:
  /// Fixed learning rate.
  HedgeState(std::size_t n, double eta);
  /// eta_t = sqrt(8 ln n / t), applied to the cumulative loss.
  static HedgeState anytime(std::size_t n);
  /// sqrt(8 ln n / T); for n = 1 any rate works and 1 is returned.
  static double default_eta(std::size_t n, std::size_t horizon);

  std::size_t size() const override { return logWeights_.size(); }
  std::vector<double> strategy() const override;
  void update(std::span<const double> loss) override;
  std::size_t rounds() const override { return t_; }
  const RegretTracker& tracker() const override { return tracker_; }
  std::unique_ptr<OnlineLearner> clone() const override { return std::make_unique<HedgeState>(*this); }
  std::string name() const override { return "hedge"; }

  /// Gain form used by the per-history updates: weights grow with exp(eta * gain).
  void update_gain(std::span<const double> gain);

  double eta() const noexcept { return eta_; }
  EtaSchedule schedule() const noexcept { return schedule_; }
  const std::vector<double>& log_weights() const noexcept { return logWeights_; }

  nlohmann::json to_json() const;
  static HedgeState from_json(const nlohmann::json& doc);

 private:
  HedgeState() = default;
  void apply(std::span<const double> loss, double sign);

  std::vector<double> logWeights_;
  double eta_ = 1.0;
  EtaSchedule schedule_ = EtaSchedule::Fixed;
  std::size_t t_ = 0;
  RegretTracker tracker_;
};

/// Value-semantics form of the update.
HedgeState hedge_update(HedgeState state, std::span<const double> loss);

enum class StepSchedule { Constant, InverseSqrt };

/// Projected online gradient descent on the simplex.
class OGDState final : public OnlineLearner {
 public:
  /// With InverseSqrt the step at round t is stepSize / sqrt(t).
  OGDState(std::size_t n, double stepSize, StepSchedule schedule = StepSchedule::InverseSqrt);
  /// stepSize = D / G with diameter sqrt(2) and gradient bound sqrt(n).
  static OGDState standard(std::size_t n);
  /// 1.5 D G sqrt(T) for the standard schedule.
  static double regret_bound(std::size_t n, std::size_t horizon);

  std::size_t size() const override { return point_.size(); }
  std::vector<double> strategy() const override { return point_; }
  void update(std::span<const double> loss) override;
  std::size_t rounds() const override { return t_; }
  const RegretTracker& tracker() const override { return tracker_; }
  std::unique_ptr<OnlineLearner> clone() const override { return std::make_unique<OGDState>(*this); }
  std::string name() const override { return "ogd"; }

  double step_size() const noexcept { return stepSize_; }

  nlohmann::json to_json() const;

 private:
  std::vector<double> point_;
  double stepSize_;
  StepSchedule schedule_;
  std::size_t t_ = 0;
  RegretTracker tracker_;
};

OGDState ogd_update(OGDState state, std::span<const double> loss);

/// Euclidean projection onto the probability simplex (sort-based).
std::vector<double> project_to_simplex(std::span<const double> v);

struct BanditFeedbackConfig {
  double alpha = 0.5;
  double gamma = 0.1;
  void validate() const;
  /// min(1, sqrt(n) * T^(-1/3)).
  static double default_gamma(std::size_t n, std::size_t horizon);
};

/// Sparse importance-weighted estimate of the self-play loss from one
/// observed comparison of arm i (learner) against arm j (opponent).
LossVector bandit_loss_estimate(const BanditFeedbackConfig& cfg, std::span<const double> p, std::size_t i, std::size_t j,
                                double observed);

/// (1 - gamma) p + gamma / n.
std::vector<double> mix_with_uniform(std::span<const double> p, double gamma);

/// Mean of a batch of loss vectors.
LossVector minibatch_accumulate(std::span<const LossVector> losses, std::size_t batchSize);

}  // namespace spo::learn
