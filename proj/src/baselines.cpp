#include "spo/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace spo::base {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// first - second with duplicate indices merged.
SparseFeatures difference(const Comparison& c) {
  std::map<std::uint32_t, double> acc;
  for (const auto& [i, v] : c.first) acc[i] += v;
  for (const auto& [i, v] : c.second) acc[i] -= v;
  SparseFeatures out;
  for (const auto& [i, v] : acc)
    if (v != 0.0) out.emplace_back(i, v);
  return out;
}

double dot(const SparseFeatures& f, std::span<const double> theta) {
  double s = 0.0;
  for (const auto& [i, v] : f) s += v * theta[i];
  return s;
}

/// Distinct (difference, label) terms with multiplicities.
struct Prepared {
  std::vector<SparseFeatures> diffs;
  std::vector<double> labels;
  std::vector<double> weights;
  double total = 0.0;
};

Prepared prepare(std::span<const Comparison> data, std::size_t dim) {
  std::map<std::pair<SparseFeatures, double>, double> counts;
  for (const auto& c : data) {
    if (!(c.label >= 0.0 && c.label <= 1.0)) throw std::invalid_argument("fit_bradley_terry: label outside [0, 1]");
    SparseFeatures d = difference(c);
    for (const auto& [i, v] : d)
      if (i >= dim) throw std::invalid_argument("fit_bradley_terry: feature index out of range");
    counts[{std::move(d), c.label}] += 1.0;
  }
  Prepared p;
  for (auto& [key, n] : counts) {
    p.diffs.push_back(key.first);
    p.labels.push_back(key.second);
    p.weights.push_back(n);
  }
  p.total = static_cast<double>(data.size());
  return p;
}

double objective(const Prepared& p, std::span<const double> theta, double lambda) {
  double loss = 0.0;
  for (std::size_t k = 0; k < p.diffs.size(); ++k) {
    const double d = dot(p.diffs[k], theta);
    loss += p.weights[k] * (p.labels[k] * softplus(-d) + (1.0 - p.labels[k]) * softplus(d));
  }
  loss /= p.total;
  double norm = 0.0;
  for (double t : theta) norm += t * t;
  return loss + lambda * norm;
}

void gradient(const Prepared& p, std::span<const double> theta, double lambda, std::vector<double>& g) {
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t k = 0; k < p.diffs.size(); ++k) {
    const double coef = p.weights[k] * (sigmoid(dot(p.diffs[k], theta)) - p.labels[k]) / p.total;
    for (const auto& [i, v] : p.diffs[k]) g[i] += coef * v;
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * lambda * theta[i];
}

}  // namespace

RewardTable RewardTable::zeros(std::size_t states, std::size_t actions) {
  return RewardTable{states, actions, std::vector<double>(states * actions, 0.0)};
}

double RewardTable::score(const SparseFeatures& f) const {
  double s = 0.0;
  for (const auto& [i, v] : f) s += v * values.at(i);
  return s;
}

void RewardTable::validate() const {
  if (values.size() != states * actions) throw std::domain_error("RewardTable: shape mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw std::domain_error("RewardTable: non-finite entry");
}

nlohmann::json RewardTable::to_json() const {
  return {{"states", states}, {"actions", actions}, {"values", values}};
}

RewardTable RewardTable::from_json(const nlohmann::json& doc) {
  RewardTable r{doc.at("states").get<std::size_t>(), doc.at("actions").get<std::size_t>(),
                doc.at("values").get<std::vector<double>>()};
  r.validate();
  return r;
}

void BTFitConfig::validate() const {
  if (!(learningRate > 0.0)) throw std::invalid_argument("BTFitConfig: learningRate must be positive");
  if (epochs < 1) throw std::invalid_argument("BTFitConfig: epochs must be at least 1");
  if (!(regularization >= 0.0)) throw std::invalid_argument("BTFitConfig: regularization must be non-negative");
}

double bradley_terry_loss(const RewardTable& r, std::span<const Comparison> data, double regularization) {
  if (data.empty()) throw std::invalid_argument("bradley_terry_loss: empty dataset");
  return objective(prepare(data, r.size()), r.values, regularization);
}

BTFitResult fit_bradley_terry(std::span<const Comparison> data, const BTFitConfig& cfg, RewardTable init) {
  cfg.validate();
  init.validate();
  if (data.empty()) throw std::invalid_argument("fit_bradley_terry: empty dataset");
  const Prepared p = prepare(data, init.size());

  BTFitResult out{std::move(init), {}};
  std::vector<double>& theta = out.table.values;
  std::vector<double> g(theta.size()), trial(theta.size());
  double loss = objective(p, theta, cfg.regularization);
  if (!std::isfinite(loss)) throw std::runtime_error("fit_bradley_terry: non-finite loss");
  out.lossHistory.push_back(loss);
  double step = cfg.learningRate;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    gradient(p, theta, cfg.regularization, g);
    double gg = 0.0;
    for (double v : g) gg += v * v;
    if (gg < 1e-24) break;
    step = std::min(cfg.learningRate, 2.0 * step);
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      for (std::size_t i = 0; i < theta.size(); ++i) trial[i] = theta[i] - step * g[i];
      const double next = objective(p, trial, cfg.regularization);
      if (!std::isfinite(next)) throw std::runtime_error("fit_bradley_terry: non-finite loss");
      if (next <= loss - 1e-4 * step * gg) {
        theta.swap(trial);
        loss = next;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    out.lossHistory.push_back(loss);
  }
  return out;
}

SparseFeatures option_features(std::size_t option) { return {{static_cast<std::uint32_t>(option), 1.0}}; }

SparseFeatures trajectory_features(const pref::Trajectory& xi, std::size_t actions) {
  std::map<std::uint32_t, double> acc;
  for (const auto& st : xi.steps) acc[static_cast<std::uint32_t>(static_cast<std::size_t>(st.state) * actions + static_cast<std::size_t>(st.action))] += 1.0;
  return {acc.begin(), acc.end()};
}

game::MixedStrategy soft_opt_policy(const RewardTable& r, const game::MixedStrategy& ref, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("soft_opt_policy: beta must be positive");
  r.validate();
  ref.validate();
  if (r.states != 1 || r.size() != ref.size()) throw std::invalid_argument("soft_opt_policy: size mismatch");
  const double top = *std::max_element(r.values.begin(), r.values.end());
  std::vector<double> tilt(ref.size());
  bool flat = true;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    tilt[i] = std::exp((r.values[i] - top) / beta);
    flat = flat && tilt[i] == 1.0;
  }
  if (flat) return ref;
  double total = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) total += ref[i] * tilt[i];
  std::vector<double> p(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) p[i] = ref[i] * tilt[i] / total;
  return game::MixedStrategy(std::move(p));
}

void DpoAnalysisConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("DpoAnalysisConfig: beta must be positive");
  referencePolicy.validate();
}

double dpo_loss_value(const pref::PreferenceMatrix& m, const game::MixedStrategy& pi, const DpoAnalysisConfig& cfg) {
  cfg.validate();
  const std::size_t n = m.size();
  if (pi.size() != n || cfg.referencePolicy.size() != n) throw std::invalid_argument("dpo_loss_value: size mismatch");
  std::vector<double> logRatio(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pi[i] > 0.0) || !(cfg.referencePolicy[i] > 0.0)) throw std::domain_error("dpo_loss_value: zero-probability entry");
    logRatio[i] = std::log(pi[i]) - std::log(cfg.referencePolicy[i]);
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double weight = pref::to_win_probability(m(i, j));
      if (weight == 0.0) continue;
      loss += weight * softplus(-cfg.beta * (logRatio[i] - logRatio[j]));
    }
  }
  return loss;
}

std::size_t dpo_term_count(const pref::PreferenceMatrix& m) { return m.size() * (m.size() - 1) / 2; }

GridMinimum dpo_grid_search(const pref::PreferenceMatrix& m, const DpoAnalysisConfig& cfg, double resolution) {
  if (m.size() != 3) throw std::invalid_argument("dpo_grid_search: three options required");
  const long steps = std::lround(1.0 / resolution);
  if (steps < 3 || std::abs(static_cast<double>(steps) * resolution - 1.0) > 1e-9) {
    throw std::invalid_argument("dpo_grid_search: resolution must divide 1");
  }
  GridMinimum best{{}, std::numeric_limits<double>::infinity()};
  game::MixedStrategy pi(std::vector<double>(3));
  for (long i = 1; i < steps - 1; ++i) {
    for (long j = 1; i + j < steps; ++j) {
      const long k = steps - i - j;
      pi.probs = {static_cast<double>(i) / steps, static_cast<double>(j) / steps, static_cast<double>(k) / steps};
      const double v = dpo_loss_value(m, pi, cfg);
      if (v < best.loss) best = {pi, v};
    }
  }
  return best;
}

std::vector<DpoRow> dpo_analysis(const pref::PreferenceMatrix& m, std::span<const double> betas, double resolution) {
  const auto mw = game::exact_minimax_winner(m).strategy;
  const auto ref = game::MixedStrategy::uniform(m.size());
  std::vector<DpoRow> rows;
  for (double beta : betas) {
    const DpoAnalysisConfig cfg{beta, ref};
    const auto grid = dpo_grid_search(m, cfg, resolution);
    rows.push_back({beta, dpo_loss_value(m, ref, cfg), dpo_loss_value(m, mw, cfg), game::l1_distance(grid.argmin.view(), mw.view())});
  }
  return rows;
}

std::string dpo_csv(std::span<const DpoRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "beta,loss_ref,loss_mw,argmin_l1_to_mw\n";
  for (const auto& r : rows) out << r.beta << ',' << r.lossReference << ',' << r.lossMinimaxWinner << ',' << r.argminDistance << '\n';
  return out.str();
}

RlhfSolution rlhf_closed_form(const pref::PreferenceMatrix& m, double beta, const BTFitConfig& fit) {
  const std::size_t n = m.size();
  std::vector<Comparison> data;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) data.push_back({option_features(i), option_features(j), pref::to_win_probability(m(i, j))});
  RlhfSolution out;
  out.reward = fit_bradley_terry(data, fit, RewardTable::zeros(1, n)).table;
  out.policy = soft_opt_policy(out.reward, game::MixedStrategy::uniform(n), beta);
  const double top = *std::max_element(out.reward.values.begin(), out.reward.values.end());
  for (std::size_t i = 0; i < n; ++i)
    if (out.reward.values[i] >= top - 1e-6) out.topOptions.push_back(i);
  return out;
}

void RmConfig::validate() const {
  fit.validate();
  if (refitEvery < 1) throw std::invalid_argument("RmConfig: refitEvery must be at least 1");
  if (fit.batchSize < 1) throw std::invalid_argument("RmConfig: fit.batchSize must be at least 1");
  if (!(rewardClip > 0.0)) throw std::invalid_argument("RmConfig: rewardClip must be positive");
}

RewardModelLabeler::RewardModelLabeler(const env::TabularMDP& mdp, pref::OraclePtr oracle, RmConfig cfg)
    : actions_(mdp.actions()), oracle_(std::move(oracle)), cfg_(cfg), table_(RewardTable::zeros(mdp.states(), mdp.actions())) {
  if (!oracle_) throw std::invalid_argument("RewardModelLabeler: null oracle");
  cfg_.validate();
}

void RewardModelLabeler::warm_up(std::span<const pref::Trajectory> initial, CounterRng&) {
  for (const auto& xi : initial) {
    replay_.push_back(xi);
    if (cfg_.replayCapacity && replay_.size() > cfg_.replayCapacity) replay_.pop_front();
  }
}

void RewardModelLabeler::refit(CounterRng& rng) {
  if (replay_.size() < 2) return;
  for (std::size_t k = 0; k < cfg_.fit.batchSize; ++k) {
    const auto& a = replay_[static_cast<std::size_t>(rng() % replay_.size())];
    const auto& b = replay_[static_cast<std::size_t>(rng() % replay_.size())];
    const double label = pref::to_win_probability(oracle_->compare(a, b));
    data_.push_back({trajectory_features(a, actions_), trajectory_features(b, actions_), label});
    if (cfg_.comparisonWindow && data_.size() > cfg_.comparisonWindow) data_.pop_front();
  }
  queries_ += cfg_.fit.batchSize;
  const std::vector<Comparison> window(data_.begin(), data_.end());
  table_ = fit_bradley_terry(window, cfg_.fit, table_).table;
  ++refits_;
}

std::vector<double> RewardModelLabeler::label(const pref::Trajectory& xi, CounterRng& rng) {
  replay_.push_back(xi);
  if (cfg_.replayCapacity && replay_.size() > cfg_.replayCapacity) replay_.pop_front();
  if (calls_++ % cfg_.refitEvery == 0) refit(rng);
  std::vector<double> out(xi.horizon());
  for (std::size_t h = 0; h < xi.horizon(); ++h) {
    const double r = table_.at(static_cast<std::size_t>(xi.steps[h].state), static_cast<std::size_t>(xi.steps[h].action));
    out[h] = std::clamp(r, -cfg_.rewardClip, cfg_.rewardClip);
  }
  return out;
}

practical::PracticalRun run_iterative_rm(const env::TabularMDP& mdp, pref::OraclePtr oracle, const RmConfig& rm,
                                         practical::PracticalConfig cfg, const practical::IterationFn& onIteration) {
  RewardModelLabeler labeler(mdp, oracle, rm);
  return practical::run_practical(mdp, *oracle, labeler, cfg, onIteration);
}

}  // namespace spo::base
