#include "spo/pref_core.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace spo::pref {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Slack on the far slice edge so that points spaced exactly one slice apart
// (e.g. compass directions) land inside despite atan2 rounding.
constexpr double kSliceTolerance = 1e-9;

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double checked_preference(double value) {
  if (!std::isfinite(value) || value < -1.0 || value > 1.0) {
    throw std::domain_error("preference value outside [-1, 1]: " + std::to_string(value));
  }
  return value;
}

// ---------------------------------------------------------------------------
// PreferenceMatrix

PreferenceMatrix::PreferenceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

PreferenceMatrix::PreferenceMatrix(const std::vector<std::vector<double>>& rows) : n_(rows.size()), data_(n_ * n_) {
  for (std::size_t i = 0; i < n_; ++i) {
    if (rows[i].size() != n_) throw std::invalid_argument("PreferenceMatrix: rows must form a square matrix");
    for (std::size_t j = 0; j < n_; ++j) data_[i * n_ + j] = checked_preference(rows[i][j]);
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (data_[i * n_ + i] != 0.0) throw std::invalid_argument("PreferenceMatrix: nonzero diagonal");
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (data_[i * n_ + j] != -data_[j * n_ + i]) {
        throw std::invalid_argument("PreferenceMatrix: entries (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") are not anti-symmetric");
      }
    }
  }
}

double PreferenceMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw std::out_of_range("PreferenceMatrix: option index out of range");
  return (*this)(i, j);
}

void PreferenceMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_) throw std::out_of_range("PreferenceMatrix: option index out of range");
  if (i == j) {
    if (value != 0.0) throw std::invalid_argument("PreferenceMatrix: diagonal must be zero");
    return;
  }
  checked_preference(value);
  data_[i * n_ + j] = value;
  data_[j * n_ + i] = -value;
}

PreferenceMatrix PreferenceMatrix::scaled(double factor) const {
  PreferenceMatrix out(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) out.set(i, j, factor * (*this)(i, j));
  return out;
}

std::vector<std::vector<double>> PreferenceMatrix::rows() const {
  std::vector<std::vector<double>> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

nlohmann::json PreferenceMatrix::to_json() const { return {{"n", n_}, {"entries", rows()}}; }

PreferenceMatrix PreferenceMatrix::from_json(const nlohmann::json& doc) {
  const auto n = doc.at("n").get<std::size_t>();
  auto entries = doc.at("entries").get<std::vector<std::vector<double>>>();
  if (entries.size() != n) throw std::invalid_argument("PreferenceMatrix JSON: 'n' does not match entries");
  return PreferenceMatrix(entries);
}

// ---------------------------------------------------------------------------

void SubpopulationSpec::validate() const {
  if (!(a >= 0.0 && b >= 0.0 && c >= 0.0)) throw std::invalid_argument("SubpopulationSpec: negative weight");
  if (std::abs(a + b + c - 1.0) > 1e-12) throw std::invalid_argument("SubpopulationSpec: weights must sum to 1");
}

PreferenceMatrix subpopulation_matrix(const SubpopulationSpec& spec) {
  spec.validate();
  PreferenceMatrix m(3);
  m.set(0, 1, spec.c);
  m.set(0, 2, -spec.b);
  m.set(1, 2, spec.a);
  return m;
}

double matrix_preference(const PreferenceMatrix& m, std::size_t i, std::size_t j) { return m.at(i, j); }

PreferenceMatrix rock_paper_scissors() {
  // Option order (rock, scissors, paper): each option beats the next one
  // cyclically, which is 3x the equal-weight sub-population matrix.
  return PreferenceMatrix({{0, 1, -1}, {-1, 0, 1}, {1, -1, 0}});
}

PreferenceMatrix four_option_intransitive() {
  return PreferenceMatrix({{0, 1, 1, -1}, {-1, 0, 1, -1}, {-1, -1, 0, 1}, {1, 1, -1, 0}});
}

PreferenceMatrix rlhf_counterexample() {
  return PreferenceMatrix({{0, 0.4, -1}, {-0.4, 0, 1}, {1, -1, 0}});
}

PreferenceMatrix gap_condition_matrix(std::size_t n, double delta) {
  if (n < 2) throw std::invalid_argument("gap_condition_matrix: need at least two options");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("gap_condition_matrix: delta outside (0, 1]");
  PreferenceMatrix m(n);
  for (std::size_t j = 1; j < n; ++j) m.set(0, j, delta);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, (j - i) % 2 == 1 ? 0.75 * delta : -0.75 * delta);
  return m;
}

// ---------------------------------------------------------------------------
// Trajectories

double Trajectory::total_reward() const { return partial_reward(0, steps.size()); }

double Trajectory::partial_reward(std::size_t begin, std::size_t end) const {
  if (!perStepReward) throw std::logic_error("trajectory carries no per-step reward");
  const auto& r = *perStepReward;
  if (end > r.size() || begin > end) throw std::out_of_range("Trajectory::partial_reward: bad range");
  double total = 0.0;
  for (std::size_t i = begin; i < end; ++i) total += r[i];
  return total;
}

double max_reward_preference(const Trajectory& a, const Trajectory& b) {
  return static_cast<double>(sign_of(a.total_reward() - b.total_reward()));
}

void NoiseSpec::validate() const {
  if (!(flipProbability >= 0.0 && flipProbability <= 1.0)) throw std::invalid_argument("NoiseSpec: epsilon outside [0, 1]");
}

double noisy_preference(const Trajectory& a, const Trajectory& b, PreferenceOracle& base, const NoiseSpec& noise,
                        CounterRng& stream) {
  const bool flip = stream.bernoulli(noise.flipProbability);
  return flip ? base.compare(b, a) : base.compare(a, b);
}

NoisyPreference::NoisyPreference(OraclePtr base, NoiseSpec noise)
    : base_(std::move(base)), noise_(noise), rng_(noise.seed) {
  if (!base_) throw std::invalid_argument("NoisyPreference: null base oracle");
  noise_.validate();
}

double NoisyPreference::compare(const Trajectory& a, const Trajectory& b) {
  return noisy_preference(a, b, *base_, noise_, rng_);
}

void NonMarkovSpec::validate() const {
  if (!(splitFraction > 0.0 && splitFraction < 1.0)) throw std::invalid_argument("NonMarkovSpec: splitFraction must be in (0, 1)");
}

std::size_t NonMarkovSpec::tail_begin(std::size_t horizon) const {
  return static_cast<std::size_t>(std::floor(splitFraction * static_cast<double>(horizon)));
}

double nonmarkov_preference(const Trajectory& a, const Trajectory& b, const NonMarkovSpec& spec) {
  const std::size_t ha = a.horizon();
  const std::size_t hb = b.horizon();
  const double tailA = a.partial_reward(spec.tail_begin(ha), ha);
  const double tailB = b.partial_reward(spec.tail_begin(hb), hb);
  const bool feasibleA = tailA <= spec.thresholdRMax;
  const bool feasibleB = tailB <= spec.thresholdRMax;
  if (feasibleA != feasibleB) return feasibleA ? 1.0 : -1.0;
  if (feasibleA) return static_cast<double>(sign_of(a.total_reward() - b.total_reward()));
  return static_cast<double>(sign_of(tailB - tailA));
}

NonMarkovOracle::NonMarkovOracle(NonMarkovSpec spec) : spec_(spec) { spec_.validate(); }

// ---------------------------------------------------------------------------
// Geometric preference

double wrap_angle(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

GeometricEndpoint GeometricEndpoint::from_polar(double radius, double angle) {
  if (radius < 0.0) throw std::invalid_argument("GeometricEndpoint: negative radius");
  return {radius, wrap_angle(angle)};
}

GeometricEndpoint GeometricEndpoint::from_xy(double x, double y) {
  return {std::hypot(x, y), wrap_angle(std::atan2(y, x))};
}

bool in_forward_slice(double origin, double target, double slice) {
  const double ahead = wrap_angle(target - origin);
  return ahead > kSliceTolerance && ahead <= slice + kSliceTolerance;
}

double geometric_raw_score(const GeometricEndpoint& p, const GeometricEndpoint& q, const GeometricParams& params) {
  double distance = 0.0;
  if (p.radius > params.distThreshold && q.radius > params.distThreshold) {
    distance = 1.0;
  } else {
    distance = p.radius > q.radius ? 1.0 : 0.0;
  }
  // p beats q when p sits in the slice just ahead of q.
  const double angular = in_forward_slice(q.angle, p.angle, params.angleSlice) ? 1.0 : 0.0;
  return params.distWeight * distance + (1.0 - params.distWeight) * angular;
}

double geometric_preference(const GeometricEndpoint& p, const GeometricEndpoint& q, const GeometricParams& params) {
  if (!(params.angleSlice > 0.0 && params.angleSlice < kTwoPi)) throw std::invalid_argument("geometric_preference: angleSlice outside (0, 2pi)");
  return geometric_raw_score(p, q, params) - geometric_raw_score(q, p, params);
}

// ---------------------------------------------------------------------------
// Oracles

MatrixOracle::MatrixOracle(PreferenceMatrix m, Classifier classify) : m_(std::move(m)), classify_(std::move(classify)) {}

std::size_t MatrixOracle::first_action(const Trajectory& t) {
  if (t.steps.empty()) throw std::invalid_argument("MatrixOracle: empty trajectory");
  return static_cast<std::size_t>(t.steps.front().action);
}

double MatrixOracle::compare(const Trajectory& a, const Trajectory& b) { return m_.at(classify_(a), classify_(b)); }

GeometricOracle::GeometricOracle(EndpointFn endpoint, GeometricParams params)
    : endpoint_(std::move(endpoint)), params_(params) {}

double GeometricOracle::compare(const Trajectory& a, const Trajectory& b) {
  return geometric_preference(endpoint_(a), endpoint_(b), params_);
}

}  // namespace spo::pref
