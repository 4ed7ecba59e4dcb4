#include "spo/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spo::learn {

void check_loss(std::span<const double> loss) {
  for (double v : loss)
    if (!std::isfinite(v)) throw std::invalid_argument("loss vector has a non-finite entry");
}

void RegretTracker::record(std::span<const double> strategy, std::span<const double> loss) {
  double expected = 0.0;
  for (std::size_t i = 0; i < loss.size(); ++i) {
    expected += strategy[i] * loss[i];
    perArm_[i] += loss[i];
  }
  learnerLoss_ += expected;
}

double RegretTracker::regret() const {
  if (perArm_.empty()) return 0.0;
  return learnerLoss_ - *std::min_element(perArm_.begin(), perArm_.end());
}

// ---------------------------------------------------------------------------
// Hedge

HedgeState::HedgeState(std::size_t n, double eta) : logWeights_(n, 0.0), eta_(eta), tracker_(n) {
  if (n == 0) throw std::invalid_argument("HedgeState: no actions");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("HedgeState: eta must be positive");
}

HedgeState HedgeState::anytime(std::size_t n) {
  HedgeState h(n, default_eta(n, 1));
  h.schedule_ = EtaSchedule::Anytime;
  return h;
}

double HedgeState::default_eta(std::size_t n, std::size_t horizon) {
  if (n < 2) return 1.0;
  if (horizon == 0) throw std::invalid_argument("HedgeState::default_eta: zero horizon");
  return std::sqrt(8.0 * std::log(static_cast<double>(n)) / static_cast<double>(horizon));
}

std::vector<double> HedgeState::strategy() const {
  const double top = *std::max_element(logWeights_.begin(), logWeights_.end());
  std::vector<double> p(logWeights_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logWeights_[i] - top);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

void HedgeState::apply(std::span<const double> loss, double sign) {
  if (loss.size() != logWeights_.size()) throw std::invalid_argument("HedgeState: loss dimension mismatch");
  check_loss(loss);
  const std::vector<double> p = strategy();
  if (sign > 0.0) {
    tracker_.record(p, loss);
  } else {
    std::vector<double> asLoss(loss.size());
    for (std::size_t i = 0; i < loss.size(); ++i) asLoss[i] = -loss[i];
    tracker_.record(p, asLoss);
  }
  ++t_;
  if (schedule_ == EtaSchedule::Fixed) {
    for (std::size_t i = 0; i < loss.size(); ++i) logWeights_[i] -= sign * eta_ * loss[i];
  } else {
    // Anytime rate: weights follow the cumulative loss at the current rate.
    eta_ = default_eta(logWeights_.size(), t_ + 1);
    const auto& cumulative = tracker_.per_arm_loss();
    for (std::size_t i = 0; i < loss.size(); ++i) logWeights_[i] = -eta_ * cumulative[i];
  }
  const double top = *std::max_element(logWeights_.begin(), logWeights_.end());
  for (double& w : logWeights_) w -= top;
}

void HedgeState::update(std::span<const double> loss) { apply(loss, 1.0); }

void HedgeState::update_gain(std::span<const double> gain) { apply(gain, -1.0); }

nlohmann::json HedgeState::to_json() const {
  return {{"logWeights", logWeights_},
          {"eta", eta_},
          {"schedule", schedule_ == EtaSchedule::Fixed ? "fixed" : "anytime"},
          {"t", t_},
          {"learnerLoss", tracker_.learner_loss()},
          {"perArmLoss", tracker_.per_arm_loss()}};
}

HedgeState HedgeState::from_json(const nlohmann::json& doc) {
  HedgeState h;
  h.logWeights_ = doc.at("logWeights").get<std::vector<double>>();
  h.eta_ = doc.at("eta").get<double>();
  h.schedule_ = doc.at("schedule").get<std::string>() == "anytime" ? EtaSchedule::Anytime : EtaSchedule::Fixed;
  h.t_ = doc.at("t").get<std::size_t>();
  h.tracker_ = RegretTracker(doc.at("learnerLoss").get<double>(), doc.at("perArmLoss").get<std::vector<double>>());
  return h;
}

HedgeState hedge_update(HedgeState state, std::span<const double> loss) {
  state.update(loss);
  return state;
}

// ---------------------------------------------------------------------------
// OGD

std::vector<double> project_to_simplex(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("project_to_simplex: empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cumulative += u[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

OGDState::OGDState(std::size_t n, double stepSize, StepSchedule schedule)
    : point_(n, n ? 1.0 / static_cast<double>(n) : 0.0), stepSize_(stepSize), schedule_(schedule), tracker_(n) {
  if (n == 0) throw std::invalid_argument("OGDState: no actions");
  if (!(stepSize > 0.0) || !std::isfinite(stepSize)) throw std::invalid_argument("OGDState: stepSize must be positive");
}

OGDState OGDState::standard(std::size_t n) {
  return OGDState(n, std::sqrt(2.0) / std::sqrt(static_cast<double>(n)), StepSchedule::InverseSqrt);
}

double OGDState::regret_bound(std::size_t n, std::size_t horizon) {
  return 1.5 * std::sqrt(2.0) * std::sqrt(static_cast<double>(n)) * std::sqrt(static_cast<double>(horizon));
}

void OGDState::update(std::span<const double> loss) {
  if (loss.size() != point_.size()) throw std::invalid_argument("OGDState: loss dimension mismatch");
  check_loss(loss);
  tracker_.record(point_, loss);
  ++t_;
  const double step = schedule_ == StepSchedule::Constant ? stepSize_ : stepSize_ / std::sqrt(static_cast<double>(t_));
  std::vector<double> moved(point_.size());
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = point_[i] - step * loss[i];
  point_ = project_to_simplex(moved);
}

nlohmann::json OGDState::to_json() const {
  return {{"point", point_},
          {"stepSize", stepSize_},
          {"schedule", schedule_ == StepSchedule::Constant ? "constant" : "inverse-sqrt"},
          {"t", t_}};
}

OGDState ogd_update(OGDState state, std::span<const double> loss) {
  state.update(loss);
  return state;
}

// ---------------------------------------------------------------------------
// Bandit feedback

void BanditFeedbackConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("BanditFeedbackConfig: alpha outside [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("BanditFeedbackConfig: gamma outside [0, 1]");
}

double BanditFeedbackConfig::default_gamma(std::size_t n, std::size_t horizon) {
  if (horizon == 0) return 1.0;
  return std::min(1.0, std::sqrt(static_cast<double>(n)) * std::pow(static_cast<double>(horizon), -1.0 / 3.0));
}

LossVector bandit_loss_estimate(const BanditFeedbackConfig& cfg, std::span<const double> p, std::size_t i, std::size_t j,
                                double observed) {
  cfg.validate();
  if (i >= p.size() || j >= p.size()) throw std::out_of_range("bandit_loss_estimate: arm index out of range");
  if (!(p[i] > 0.0) || !(p[j] > 0.0)) throw std::invalid_argument("bandit_loss_estimate: sampled arm has zero probability");
  LossVector loss(p.size(), 0.0);
  loss[i] += -cfg.alpha * observed / p[i];
  loss[j] += (1.0 - cfg.alpha) * observed / p[j];
  return loss;
}

std::vector<double> mix_with_uniform(std::span<const double> p, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("mix_with_uniform: gamma outside [0, 1]");
  const double floor = gamma / static_cast<double>(p.size());
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = (1.0 - gamma) * p[i] + floor;
  return out;
}

LossVector minibatch_accumulate(std::span<const LossVector> losses, std::size_t batchSize) {
  if (batchSize == 0 || losses.empty()) throw std::invalid_argument("minibatch_accumulate: empty batch");
  if (losses.size() != batchSize) throw std::invalid_argument("minibatch_accumulate: batch length differs from B");
  const std::size_t n = losses.front().size();
  LossVector mean(n, 0.0);
  for (const auto& l : losses) {
    if (l.size() != n) throw std::invalid_argument("minibatch_accumulate: dimension mismatch");
    for (std::size_t k = 0; k < n; ++k) mean[k] += l[k];
  }
  for (double& v : mean) v /= static_cast<double>(batchSize);
  return mean;
}

}  // namespace spo::learn
