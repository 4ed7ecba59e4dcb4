#pragma once

// Preference values, finite preference matrices and the trajectory-level
// preference oracles used by the experiments.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "spo/rng.hpp"

namespace spo::pref {

/// A preference value lives in [-1, 1]; P = 2 Pr(x > y) - 1.
inline constexpr double to_win_probability(double value) noexcept { return 0.5 * (value + 1.0); }
inline constexpr double from_win_probability(double prob) noexcept { return 2.0 * prob - 1.0; }

/// Throws std::domain_error unless value is finite and in [-1, 1].
double checked_preference(double value);

/// Antisymmetric n x n payoff over a finite option set.
class PreferenceMatrix {
 public:
  PreferenceMatrix() = default;
  /// Zero matrix (every option tied).
  explicit PreferenceMatrix(std::size_t n);
  /// Validates anti-symmetry (exact), zero diagonal and range.
  explicit PreferenceMatrix(const std::vector<std::vector<double>>& rows);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  /// Bounds-checked access.
  double at(std::size_t i, std::size_t j) const;
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * n_, n_}; }

  /// Sets entries (i, j) and (j, i) together so the invariants hold.
  void set(std::size_t i, std::size_t j, double value);

  PreferenceMatrix scaled(double factor) const;
  std::vector<std::vector<double>> rows() const;

  nlohmann::json to_json() const;
  static PreferenceMatrix from_json(const nlohmann::json& doc);

  friend bool operator==(const PreferenceMatrix&, const PreferenceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Population shares of the three transitive sub-populations.
struct SubpopulationSpec {
  double a = 1.0 / 3.0;
  double b = 1.0 / 3.0;
  double c = 1.0 / 3.0;

  void validate() const;
};

/// a * [b>c] + b * [c>a] + c * [a>b]: [[0, c, -b], [-c, 0, a], [b, -a, 0]].
PreferenceMatrix subpopulation_matrix(const SubpopulationSpec& spec);

double matrix_preference(const PreferenceMatrix& m, std::size_t i, std::size_t j);

/// Named matrices used throughout the tests and scenarios.
PreferenceMatrix rock_paper_scissors();
/// Four options (a, b, c, d) with no unique Copeland winner.
PreferenceMatrix four_option_intransitive();
/// Three options whose unique minimax winner is (5/12, 5/12, 1/6) while b is
/// the unique Copeland winner.
PreferenceMatrix rlhf_counterexample();
/// Option 0 beats every other option by delta; the others form a cyclic
/// tournament with entries of magnitude 3 delta / 4.
PreferenceMatrix gap_condition_matrix(std::size_t n, double delta);

// ---------------------------------------------------------------------------
// Trajectories and oracles
// ---------------------------------------------------------------------------

struct Step {
  int state = 0;
  int action = 0;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  std::vector<Step> steps;
  std::optional<std::vector<double>> perStepReward;

  std::size_t horizon() const noexcept { return steps.size(); }
  /// Sum of perStepReward; throws std::logic_error when rewards are absent.
  double total_reward() const;
  /// Sum of perStepReward over indices [begin, end).
  double partial_reward(std::size_t begin, std::size_t end) const;

  friend bool operator==(const Trajectory& a, const Trajectory& b) { return a.steps == b.steps; }
};

/// Abstract comparator P : Xi x Xi -> [-1, 1]. Not const: some oracles carry
/// a noise stream that advances with every call.
class PreferenceOracle {
 public:
  virtual ~PreferenceOracle() = default;
  virtual double compare(const Trajectory& a, const Trajectory& b) = 0;
  double operator()(const Trajectory& a, const Trajectory& b) { return compare(a, b); }
};

using OraclePtr = std::shared_ptr<PreferenceOracle>;

/// 2 * 1[r(a) > r(b)] - 1 with ties mapped to 0.
double max_reward_preference(const Trajectory& a, const Trajectory& b);

struct NoiseSpec {
  double flipProbability = 0.0;
  std::uint64_t seed = 0;
  void validate() const;
};

/// One Bernoulli(eps) draw per call; a flip swaps the arguments of the base.
class NoisyPreference final : public PreferenceOracle {
 public:
  NoisyPreference(OraclePtr base, NoiseSpec noise);
  double compare(const Trajectory& a, const Trajectory& b) override;
  std::uint64_t draws() const noexcept { return rng_.counter(); }

 private:
  OraclePtr base_;
  NoiseSpec noise_;
  CounterRng rng_;
};

/// Free-function form: the caller owns the stream.
double noisy_preference(const Trajectory& a, const Trajectory& b, PreferenceOracle& base,
                        const NoiseSpec& noise, CounterRng& stream);

struct NonMarkovSpec {
  double thresholdRMax = 1.0;
  double splitFraction = 0.75;
  void validate() const;
  /// First index of the constrained tail: floor(splitFraction * H).
  std::size_t tail_begin(std::size_t horizon) const;
};

/// Feasibility (tail return <= r_max) first, then total return. Two infeasible
/// trajectories compare by tail return, lower preferred.
double nonmarkov_preference(const Trajectory& a, const Trajectory& b, const NonMarkovSpec& spec);

struct GeometricEndpoint {
  double radius = 0.0;
  double angle = 0.0;  // [0, 2 pi)

  static GeometricEndpoint from_polar(double radius, double angle);
  static GeometricEndpoint from_xy(double x, double y);
};

struct GeometricParams {
  double distWeight = 0.3;  // angular weight is 1 - distWeight
  double angleSlice = std::numbers::pi / 4.0;
  double distThreshold = 10.0;
};

/// Wraps an angle into [0, 2 pi).
double wrap_angle(double angle);
/// True when `target` lies in the slice of width `slice` just ahead
/// (counter-clockwise) of `origin`; the far edge is included.
bool in_forward_slice(double origin, double target, double slice);
/// One-sided score in [0, 1] for "p beats q".
double geometric_raw_score(const GeometricEndpoint& p, const GeometricEndpoint& q, const GeometricParams& params);
/// raw(p, q) - raw(q, p): antisymmetric, in [-1, 1].
double geometric_preference(const GeometricEndpoint& p, const GeometricEndpoint& q, const GeometricParams& params = {});

// Concrete oracles ------------------------------------------------------------

class MaxRewardOracle final : public PreferenceOracle {
 public:
  double compare(const Trajectory& a, const Trajectory& b) override { return max_reward_preference(a, b); }
};

class NonMarkovOracle final : public PreferenceOracle {
 public:
  explicit NonMarkovOracle(NonMarkovSpec spec);
  double compare(const Trajectory& a, const Trajectory& b) override { return nonmarkov_preference(a, b, spec_); }

 private:
  NonMarkovSpec spec_;
};

class ZeroOracle final : public PreferenceOracle {
 public:
  double compare(const Trajectory&, const Trajectory&) override { return 0.0; }
};

/// Maps each trajectory to an option index and looks the pair up in a matrix.
/// With the default classifier (first action) this is the bandit oracle.
class MatrixOracle final : public PreferenceOracle {
 public:
  using Classifier = std::function<std::size_t(const Trajectory&)>;
  explicit MatrixOracle(PreferenceMatrix m, Classifier classify = first_action);
  double compare(const Trajectory& a, const Trajectory& b) override;
  const PreferenceMatrix& matrix() const noexcept { return m_; }

  static std::size_t first_action(const Trajectory& t);

 private:
  PreferenceMatrix m_;
  Classifier classify_;
};

class GeometricOracle final : public PreferenceOracle {
 public:
  using EndpointFn = std::function<GeometricEndpoint(const Trajectory&)>;
  GeometricOracle(EndpointFn endpoint, GeometricParams params = {});
  double compare(const Trajectory& a, const Trajectory& b) override;

 private:
  EndpointFn endpoint_;
  GeometricParams params_;
};

class FunctionOracle final : public PreferenceOracle {
 public:
  using Fn = std::function<double(const Trajectory&, const Trajectory&)>;
  explicit FunctionOracle(Fn fn) : fn_(std::move(fn)) {}
  double compare(const Trajectory& a, const Trajectory& b) override { return fn_(a, b); }

 private:
  Fn fn_;
};

}  // namespace spo::pref
