#include "spo/envs.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace spo::env {

namespace {

std::size_t sample_outcome(std::span<const Outcome> outcomes, CounterRng& rng) {
  if (outcomes.size() == 1) return static_cast<std::size_t>(outcomes.front().state);
  std::vector<double> p(outcomes.size());
  for (std::size_t k = 0; k < outcomes.size(); ++k) p[k] = outcomes[k].prob;
  return static_cast<std::size_t>(outcomes[sample_categorical(p, rng)].state);
}

void check_distribution(std::span<const double> p, double tol, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": negative or non-finite probability");
    total += v;
  }
  if (std::abs(total - 1.0) > tol) throw std::invalid_argument(std::string(what) + ": probabilities do not sum to 1");
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) throw std::overflow_error("history index overflow");
  return a * b;
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularMDP

TabularMDP::TabularMDP(std::size_t nStates, std::size_t nActions, std::size_t horizon)
    : nStates_(nStates), nActions_(nActions), horizon_(horizon), next_(nStates * nActions), initial_(nStates, 0.0) {
  if (nStates == 0 || nActions == 0 || horizon == 0) throw std::invalid_argument("TabularMDP: empty state, action or horizon");
  if (nActions > 32) throw std::invalid_argument("TabularMDP: at most 32 actions");
  initial_[0] = 1.0;
}

void TabularMDP::set_transition(std::size_t s, std::size_t a, std::vector<Outcome> outcomes) {
  if (s >= nStates_ || a >= nActions_) throw std::out_of_range("TabularMDP::set_transition: index out of range");
  std::erase_if(outcomes, [](const Outcome& o) { return o.prob == 0.0; });
  for (const auto& o : outcomes) {
    if (o.state < 0 || static_cast<std::size_t>(o.state) >= nStates_) throw std::out_of_range("TabularMDP: next state out of range");
  }
  next_[s * nActions_ + a] = std::move(outcomes);
}

void TabularMDP::set_deterministic(std::size_t s, std::size_t a, std::size_t next) {
  set_transition(s, a, {{static_cast<int>(next), 1.0}});
}

void TabularMDP::set_initial(std::vector<double> initial) {
  if (initial.size() != nStates_) throw std::invalid_argument("TabularMDP::set_initial: size mismatch");
  check_distribution(initial, 1e-12, "TabularMDP initial");
  initial_ = std::move(initial);
}

void TabularMDP::set_reward(std::vector<double> reward) {
  if (reward.size() != nStates_ * nActions_) throw std::invalid_argument("TabularMDP::set_reward: size mismatch");
  for (double r : reward)
    if (!std::isfinite(r)) throw std::invalid_argument("TabularMDP::set_reward: non-finite reward");
  reward_ = std::move(reward);
}

double TabularMDP::reward(std::size_t s, std::size_t a) const {
  if (!reward_) throw std::logic_error("TabularMDP: no ground-truth reward");
  return (*reward_)[s * nActions_ + a];
}

void TabularMDP::validate() const {
  check_distribution(initial_, 1e-12, "TabularMDP initial");
  for (std::size_t k = 0; k < next_.size(); ++k) {
    double total = 0.0;
    for (const auto& o : next_[k]) {
      if (!(o.prob > 0.0)) throw std::invalid_argument("TabularMDP: non-positive transition probability");
      total += o.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("TabularMDP: transition row (" + std::to_string(k / nActions_) + "," +
                                  std::to_string(k % nActions_) + ") does not sum to 1");
    }
  }
}

TabularMDP TabularMDP::from_json(const nlohmann::json& doc) {
  TabularMDP mdp(doc.at("states").get<std::size_t>(), doc.at("actions").get<std::size_t>(), doc.at("horizon").get<std::size_t>());
  const auto& trans = doc.at("transitions");
  if (trans.size() != mdp.nStates_) throw std::invalid_argument("MDP JSON: transitions must have one entry per state");
  for (std::size_t s = 0; s < mdp.nStates_; ++s) {
    if (trans[s].size() != mdp.nActions_) throw std::invalid_argument("MDP JSON: transitions[s] must have one row per action");
    for (std::size_t a = 0; a < mdp.nActions_; ++a) {
      const auto row = trans[s][a].get<std::vector<double>>();
      if (row.size() != mdp.nStates_) throw std::invalid_argument("MDP JSON: dense transition row has the wrong length");
      std::vector<Outcome> out;
      for (std::size_t s2 = 0; s2 < row.size(); ++s2)
        if (row[s2] != 0.0) out.push_back({static_cast<int>(s2), row[s2]});
      mdp.set_transition(s, a, std::move(out));
    }
  }
  if (doc.contains("initial")) mdp.set_initial(doc.at("initial").get<std::vector<double>>());
  if (doc.contains("reward")) {
    const auto rows = doc.at("reward").get<std::vector<std::vector<double>>>();
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != mdp.nActions_) throw std::invalid_argument("MDP JSON: reward rows must have one entry per action");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    mdp.set_reward(std::move(flat));
  }
  mdp.validate();
  return mdp;
}

nlohmann::json TabularMDP::to_json() const {
  nlohmann::json trans = nlohmann::json::array();
  for (std::size_t s = 0; s < nStates_; ++s) {
    nlohmann::json perAction = nlohmann::json::array();
    for (std::size_t a = 0; a < nActions_; ++a) {
      std::vector<double> row(nStates_, 0.0);
      for (const auto& o : next(s, a)) row[static_cast<std::size_t>(o.state)] += o.prob;
      perAction.push_back(row);
    }
    trans.push_back(perAction);
  }
  nlohmann::json doc = {{"states", nStates_}, {"actions", nActions_}, {"horizon", horizon_}, {"transitions", trans}, {"initial", initial_}};
  if (reward_) {
    std::vector<std::vector<double>> rows(nStates_);
    for (std::size_t s = 0; s < nStates_; ++s)
      rows[s].assign(reward_->begin() + static_cast<long>(s * nActions_), reward_->begin() + static_cast<long>((s + 1) * nActions_));
    doc["reward"] = rows;
  }
  return doc;
}

// ---------------------------------------------------------------------------
// HistoryCodec

HistoryCodec::HistoryCodec(std::size_t nStates, std::size_t nActions, std::size_t horizon)
    : nStates_(nStates), nActions_(nActions), horizon_(horizon), counts_(horizon) {
  if (horizon == 0) throw std::invalid_argument("HistoryCodec: zero horizon");
  counts_[0] = nStates;
  for (std::size_t h = 1; h < horizon; ++h) counts_[h] = checked_mul(checked_mul(counts_[h - 1], nStates), nActions);
  trajectoryCount_ = checked_mul(counts_[horizon - 1], nActions);
}

std::uint64_t HistoryCodec::encode(std::span<const Step> prefix, std::size_t current) const {
  if (prefix.empty()) return current;
  std::uint64_t row = static_cast<std::uint64_t>(prefix.front().state);
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    const std::size_t next = k + 1 < prefix.size() ? static_cast<std::size_t>(prefix[k + 1].state) : current;
    row = extend(row, static_cast<std::size_t>(prefix[k].action), next);
  }
  return row;
}

std::pair<std::vector<Step>, std::size_t> HistoryCodec::decode(std::size_t h, std::uint64_t row) const {
  std::vector<Step> prefix(h);
  const std::size_t current = state_of(row);
  std::uint64_t rest = row / nStates_;
  for (std::size_t k = h; k-- > 0;) {
    const auto a = static_cast<int>(rest % nActions_);
    rest /= nActions_;
    const auto s = static_cast<int>(rest % nStates_);
    rest /= nStates_;
    prefix[k] = {s, a};
  }
  return {std::move(prefix), current};
}

std::uint64_t HistoryCodec::trajectory_id(const Trajectory& t) const {
  if (t.horizon() != horizon_) throw std::invalid_argument("HistoryCodec: trajectory length differs from horizon");
  std::vector<Step> prefix(t.steps.begin(), t.steps.end() - 1);
  const Step& last = t.steps.back();
  return trajectory_id(encode(prefix, static_cast<std::size_t>(last.state)), static_cast<std::size_t>(last.action));
}

std::vector<Step> HistoryCodec::decode_trajectory(std::uint64_t id) const {
  const auto lastAction = static_cast<int>(id % nActions_);
  auto [prefix, current] = decode(horizon_ - 1, id / nActions_);
  prefix.push_back({static_cast<int>(current), lastAction});
  return prefix;
}

// ---------------------------------------------------------------------------
// TabularHistoryPolicy

TabularHistoryPolicy TabularHistoryPolicy::uniform(const TabularMDP& mdp, PolicyMode mode) {
  TabularHistoryPolicy p;
  p.mode_ = mode;
  p.nStates_ = mdp.states();
  p.nActions_ = mdp.actions();
  p.tables_.resize(mdp.horizon());
  std::uint64_t totalRows = 0;
  std::optional<HistoryCodec> codec;
  if (mode == PolicyMode::Full) codec.emplace(mdp.states(), mdp.actions(), mdp.horizon());
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    const std::uint64_t rows = mode == PolicyMode::Full ? codec->count(h) : mdp.states();
    totalRows += rows;
    if (totalRows > kMaxHistoryRows) throw std::length_error("TabularHistoryPolicy: too many history rows");
    p.tables_[h].assign(rows * mdp.actions(), 1.0 / static_cast<double>(mdp.actions()));
  }
  return p;
}

void TabularHistoryPolicy::set(std::size_t h, std::uint64_t row, std::span<const double> dist) {
  if (h >= tables_.size() || row >= rows(h)) throw std::out_of_range("TabularHistoryPolicy::set: index out of range");
  if (dist.size() != nActions_) throw std::invalid_argument("TabularHistoryPolicy::set: wrong action count");
  check_distribution(dist, 1e-9, "TabularHistoryPolicy row");
  std::copy(dist.begin(), dist.end(), tables_[h].begin() + static_cast<long>(row * nActions_));
}

void TabularHistoryPolicy::validate(double tol) const {
  for (std::size_t h = 0; h < tables_.size(); ++h)
    for (std::uint64_t r = 0; r < rows(h); ++r) check_distribution(probs(h, r), tol, "TabularHistoryPolicy row");
}

nlohmann::json TabularHistoryPolicy::to_json() const {
  return {{"mode", mode_ == PolicyMode::Full ? "full" : "markov"}, {"states", nStates_}, {"actions", nActions_}, {"tables", tables_}};
}

TabularHistoryPolicy TabularHistoryPolicy::from_json(const nlohmann::json& doc) {
  TabularHistoryPolicy p;
  p.mode_ = doc.at("mode").get<std::string>() == "full" ? PolicyMode::Full : PolicyMode::Markov;
  p.nStates_ = doc.at("states").get<std::size_t>();
  p.nActions_ = doc.at("actions").get<std::size_t>();
  p.tables_ = doc.at("tables").get<std::vector<std::vector<double>>>();
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Rollouts and enumeration

Trajectory make_trajectory(const TabularMDP& mdp, std::vector<Step> steps) {
  Trajectory t;
  t.steps = std::move(steps);
  if (mdp.has_reward()) {
    std::vector<double> r(t.steps.size());
    for (std::size_t h = 0; h < r.size(); ++h)
      r[h] = mdp.reward(static_cast<std::size_t>(t.steps[h].state), static_cast<std::size_t>(t.steps[h].action));
    t.perStepReward = std::move(r);
  }
  return t;
}

Trajectory rollout(const TabularMDP& mdp, const TabularHistoryPolicy& policy, CounterRng& rng) {
  if (policy.horizon() != mdp.horizon() || policy.actions() != mdp.actions() || policy.states() != mdp.states()) {
    throw std::invalid_argument("rollout: policy does not match the MDP");
  }
  const bool full = policy.mode() == PolicyMode::Full;
  std::vector<Step> steps;
  steps.reserve(mdp.horizon());
  std::size_t s = sample_categorical(mdp.initial(), rng);
  std::uint64_t row = s;
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    const std::size_t a = sample_categorical(policy.probs(h, full ? row : s), rng);
    steps.push_back({static_cast<int>(s), static_cast<int>(a)});
    if (h + 1 == mdp.horizon()) break;
    const auto outcomes = mdp.next(s, a);
    if (outcomes.empty()) throw std::logic_error("rollout: undefined transition");
    const std::size_t next = sample_outcome(outcomes, rng);
    if (full) row = (row * mdp.actions() + a) * mdp.states() + next;
    s = next;
  }
  return make_trajectory(mdp, std::move(steps));
}

Trajectory rollout(const TabularMDP& mdp, const TabularHistoryPolicy& policy, std::uint64_t seed) {
  CounterRng rng(seed);
  return rollout(mdp, policy, rng);
}

std::vector<double> enumerate_trajectory_distribution(const TabularMDP& mdp, const TabularHistoryPolicy& policy) {
  const HistoryCodec codec(mdp.states(), mdp.actions(), mdp.horizon());
  if (codec.trajectory_count() > kMaxTrajectories) throw std::length_error("enumerate_trajectory_distribution: more than 1e6 trajectories");
  const bool full = policy.mode() == PolicyMode::Full;
  const std::size_t nA = mdp.actions();
  std::vector<double> mass(mdp.initial().begin(), mdp.initial().end());
  std::vector<double> out(codec.trajectory_count(), 0.0);
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    const bool last = h + 1 == mdp.horizon();
    std::vector<double> nextMass;
    if (!last) nextMass.assign(codec.count(h + 1), 0.0);
    for (std::uint64_t row = 0; row < mass.size(); ++row) {
      if (mass[row] == 0.0) continue;
      const std::size_t s = codec.state_of(row);
      const auto pi = policy.probs(h, full ? row : s);
      for (std::size_t a = 0; a < nA; ++a) {
        const double m = mass[row] * pi[a];
        if (m == 0.0) continue;
        if (last) {
          out[codec.trajectory_id(row, a)] += m;
        } else {
          for (const auto& o : mdp.next(s, a)) nextMass[codec.extend(row, a, static_cast<std::size_t>(o.state))] += m * o.prob;
        }
      }
    }
    if (!last) mass = std::move(nextMass);
  }
  return out;
}

std::vector<std::uint64_t> support_of(std::span<const double> dist) {
  std::vector<std::uint64_t> ids;
  for (std::uint64_t k = 0; k < dist.size(); ++k)
    if (dist[k] > 0.0) ids.push_back(k);
  return ids;
}

double distribution_preference(const TabularMDP& mdp, std::span<const double> d1, std::span<const double> d2,
                               pref::PreferenceOracle& oracle) {
  if (d1.size() != d2.size()) throw std::invalid_argument("distribution_preference: size mismatch");
  const HistoryCodec codec(mdp.states(), mdp.actions(), mdp.horizon());
  std::vector<std::uint64_t> ids;
  for (std::uint64_t k = 0; k < d1.size(); ++k)
    if (d1[k] > 0.0 || d2[k] > 0.0) ids.push_back(k);
  std::vector<Trajectory> trajs;
  trajs.reserve(ids.size());
  for (auto id : ids) trajs.push_back(make_trajectory(mdp, codec.decode_trajectory(id)));
  double total = 0.0;
  for (std::size_t u = 0; u < ids.size(); ++u) {
    for (std::size_t v = u + 1; v < ids.size(); ++v) {
      const double weight = d1[ids[u]] * d2[ids[v]] - d1[ids[v]] * d2[ids[u]];
      if (weight == 0.0) continue;
      total += oracle.compare(trajs[u], trajs[v]) * weight;
    }
  }
  return total;
}

double policy_preference(const TabularMDP& mdp, const TabularHistoryPolicy& pi1, const TabularHistoryPolicy& pi2,
                         pref::PreferenceOracle& oracle) {
  const auto d1 = enumerate_trajectory_distribution(mdp, pi1);
  const auto d2 = enumerate_trajectory_distribution(mdp, pi2);
  return distribution_preference(mdp, d1, d2, oracle);
}

Estimate policy_preference_mc(const TabularMDP& mdp, const TabularHistoryPolicy& pi1, const TabularHistoryPolicy& pi2,
                              pref::PreferenceOracle& oracle, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("policy_preference_mc: zero samples");
  CounterRng rng(seed);
  double sum = 0.0;
  double sumSq = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Trajectory a = rollout(mdp, pi1, rng);
    const Trajectory b = rollout(mdp, pi2, rng);
    const double v = oracle.compare(a, b);
    sum += v;
    sumSq += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sumSq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

std::vector<double> split_trajectory_reward(const Trajectory& xi, double total) {
  const std::size_t h = xi.horizon();
  if (h == 0) throw std::invalid_argument("split_trajectory_reward: empty trajectory");
  return std::vector<double>(h, total / static_cast<double>(h));
}

// ---------------------------------------------------------------------------
// Dynamic programming over histories

HistoryDP history_dp(const TabularMDP& mdp, std::span<const double> terminalValue, double tieTol) {
  const HistoryCodec codec(mdp.states(), mdp.actions(), mdp.horizon());
  if (terminalValue.size() != codec.trajectory_count()) throw std::invalid_argument("history_dp: terminal value size mismatch");
  const std::size_t H = mdp.horizon();
  const std::size_t nA = mdp.actions();
  HistoryDP dp;
  dp.value.resize(H);
  dp.q.resize(H);
  dp.optimalActions.resize(H);
  for (std::size_t h = H; h-- > 0;) {
    const std::uint64_t rows = codec.count(h);
    dp.value[h].assign(rows, 0.0);
    dp.q[h].assign(rows * nA, 0.0);
    dp.optimalActions[h].assign(rows, 0);
    for (std::uint64_t row = 0; row < rows; ++row) {
      const std::size_t s = codec.state_of(row);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < nA; ++a) {
        double q = 0.0;
        if (h + 1 == H) {
          q = terminalValue[codec.trajectory_id(row, a)];
        } else {
          for (const auto& o : mdp.next(s, a)) q += o.prob * dp.value[h + 1][codec.extend(row, a, static_cast<std::size_t>(o.state))];
        }
        dp.q[h][row * nA + a] = q;
        best = std::max(best, q);
      }
      dp.value[h][row] = best;
      std::uint32_t mask = 0;
      for (std::size_t a = 0; a < nA; ++a)
        if (dp.q[h][row * nA + a] >= best - tieTol) mask |= 1u << a;
      dp.optimalActions[h][row] = mask;
    }
  }
  for (std::size_t s = 0; s < mdp.states(); ++s) dp.optimum += mdp.initial()[s] * dp.value[0][s];
  return dp;
}

TabularHistoryPolicy greedy_history_policy(const TabularMDP& mdp, const HistoryDP& dp) {
  auto policy = TabularHistoryPolicy::uniform(mdp, PolicyMode::Full);
  std::vector<double> dist(mdp.actions());
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    for (std::uint64_t row = 0; row < dp.optimalActions[h].size(); ++row) {
      std::fill(dist.begin(), dist.end(), 0.0);
      dist[static_cast<std::size_t>(std::countr_zero(dp.optimalActions[h][row]))] = 1.0;
      policy.set(h, row, dist);
    }
  }
  return policy;
}

double expected_value(std::span<const double> dist, std::span<const double> values) {
  if (dist.size() != values.size()) throw std::invalid_argument("expected_value: size mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k)
    if (dist[k] != 0.0) total += dist[k] * values[k];
  return total;
}

TabularHistoryPolicy collapse_tabular(const TabularMDP& mdp, std::span<const TabularHistoryPolicy> policies,
                                      const game::MixedStrategy& weights) {
  if (policies.empty()) throw std::invalid_argument("collapse_tabular: empty policy list");
  if (weights.size() != policies.size()) throw std::invalid_argument("collapse_tabular: weight count mismatch");
  weights.validate();
  const HistoryCodec codec(mdp.states(), mdp.actions(), mdp.horizon());
  const std::size_t nA = mdp.actions();
  const std::size_t K = policies.size();
  auto out = TabularHistoryPolicy::uniform(mdp, PolicyMode::Full);

  // reach[k][row]: product of component k's own action probabilities along the
  // prefix. Transition factors are shared by all components and cancel.
  std::vector<std::vector<double>> reach(K, std::vector<double>(codec.count(0), 1.0));
  std::vector<double> dist(nA);
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    const std::uint64_t rows = codec.count(h);
    for (std::uint64_t row = 0; row < rows; ++row) {
      double denom = 0.0;
      std::fill(dist.begin(), dist.end(), 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        const double w = weights[k] * reach[k][row];
        denom += w;
        const auto pi = policies[k].probs(h, policies[k].row_of(row));
        for (std::size_t a = 0; a < nA; ++a) dist[a] += w * pi[a];
      }
      if (denom > 0.0) {
        for (double& v : dist) v /= denom;
      } else {
        std::fill(dist.begin(), dist.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) {
          const auto pi = policies[k].probs(h, policies[k].row_of(row));
          for (std::size_t a = 0; a < nA; ++a) dist[a] += weights[k] * pi[a];
        }
      }
      auto target = out.mutable_probs(h, row);
      std::copy(dist.begin(), dist.end(), target.begin());
    }
    if (h + 1 == mdp.horizon()) break;
    std::vector<std::vector<double>> nextReach(K, std::vector<double>(codec.count(h + 1), 0.0));
    for (std::uint64_t row = 0; row < rows; ++row) {
      for (std::size_t k = 0; k < K; ++k) {
        const auto pi = policies[k].probs(h, policies[k].row_of(row));
        for (std::size_t a = 0; a < nA; ++a)
          for (std::size_t s2 = 0; s2 < mdp.states(); ++s2) nextReach[k][codec.extend(row, a, s2)] = reach[k][row] * pi[a];
      }
    }
    reach = std::move(nextReach);
  }
  return out;
}

std::vector<std::vector<double>> markov_occupancy(const TabularMDP& mdp, const TabularHistoryPolicy& policy) {
  if (policy.mode() != PolicyMode::Markov) throw std::invalid_argument("markov_occupancy: policy must be Markov");
  std::vector<std::vector<double>> mu(mdp.horizon(), std::vector<double>(mdp.states(), 0.0));
  mu[0] = mdp.initial();
  for (std::size_t h = 0; h + 1 < mdp.horizon(); ++h) {
    for (std::size_t s = 0; s < mdp.states(); ++s) {
      if (mu[h][s] == 0.0) continue;
      const auto pi = policy.probs(h, s);
      for (std::size_t a = 0; a < mdp.actions(); ++a) {
        const double m = mu[h][s] * pi[a];
        if (m == 0.0) continue;
        for (const auto& o : mdp.next(s, a)) mu[h + 1][static_cast<std::size_t>(o.state)] += m * o.prob;
      }
    }
  }
  return mu;
}

double expected_reward(const TabularMDP& mdp, const TabularHistoryPolicy& policy, std::size_t begin, std::size_t end) {
  const auto mu = markov_occupancy(mdp, policy);
  double total = 0.0;
  for (std::size_t h = begin; h < std::min(end, mdp.horizon()); ++h)
    for (std::size_t s = 0; s < mdp.states(); ++s) {
      if (mu[h][s] == 0.0) continue;
      const auto pi = policy.probs(h, s);
      for (std::size_t a = 0; a < mdp.actions(); ++a) total += mu[h][s] * pi[a] * mdp.reward(s, a);
    }
  return total;
}

double optimal_markov_return(const TabularMDP& mdp) {
  std::vector<double> v(mdp.states(), 0.0);
  for (std::size_t h = mdp.horizon(); h-- > 0;) {
    std::vector<double> next(mdp.states());
    for (std::size_t s = 0; s < mdp.states(); ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < mdp.actions(); ++a) {
        double q = mdp.reward(s, a);
        if (h + 1 < mdp.horizon())
          for (const auto& o : mdp.next(s, a)) q += o.prob * v[static_cast<std::size_t>(o.state)];
        best = std::max(best, q);
      }
      next[s] = best;
    }
    v = std::move(next);
  }
  double total = 0.0;
  for (std::size_t s = 0; s < mdp.states(); ++s) total += mdp.initial()[s] * v[s];
  return total;
}

// ---------------------------------------------------------------------------
// Contextual bandit

ContextualBandit::ContextualBandit(std::vector<double> contextDistribution, std::vector<pref::PreferenceMatrix> games)
    : rho_(std::move(contextDistribution)), games_(std::move(games)) {
  if (games_.empty() || rho_.size() != games_.size()) throw std::invalid_argument("ContextualBandit: one game per context required");
  check_distribution(rho_, 1e-12, "ContextualBandit context distribution");
}

// ---------------------------------------------------------------------------
// Point navigation

namespace {
constexpr std::array<std::pair<int, int>, 8> kKingMoves = {
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

std::pair<int, int> clamp_move(const PointNavSpec& spec, std::pair<int, int> pos, int action) {
  const auto [dx, dy] = kKingMoves.at(static_cast<std::size_t>(action));
  const int x = pos.first + dx;
  const int y = pos.second + dy;
  if (std::abs(x) > spec.halfWidth || std::abs(y) > spec.halfWidth) return pos;
  return {x, y};
}
}  // namespace

int pointnav_state(const PointNavSpec& spec, int x, int y) {
  const int side = 2 * spec.halfWidth + 1;
  return (x + spec.halfWidth) * side + (y + spec.halfWidth);
}

std::pair<int, int> pointnav_position(const PointNavSpec& spec, int state) {
  const int side = 2 * spec.halfWidth + 1;
  return {state / side - spec.halfWidth, state % side - spec.halfWidth};
}

std::pair<int, int> pointnav_displacement(int action) { return kKingMoves.at(static_cast<std::size_t>(action)); }

TabularMDP make_pointnav(const PointNavSpec& spec) {
  if (spec.halfWidth < 1) throw std::invalid_argument("PointNavSpec: halfWidth must be positive");
  const int side = 2 * spec.halfWidth + 1;
  TabularMDP mdp(static_cast<std::size_t>(side * side), kKingMoves.size(), spec.horizon);
  for (int s = 0; s < side * side; ++s) {
    const auto pos = pointnav_position(spec, s);
    for (int a = 0; a < 8; ++a) {
      const auto next = clamp_move(spec, pos, a);
      mdp.set_deterministic(static_cast<std::size_t>(s), static_cast<std::size_t>(a),
                            static_cast<std::size_t>(pointnav_state(spec, next.first, next.second)));
    }
  }
  std::vector<double> initial(mdp.states(), 0.0);
  initial[static_cast<std::size_t>(pointnav_state(spec, 0, 0))] = 1.0;
  mdp.set_initial(std::move(initial));
  return mdp;
}

std::pair<int, int> pointnav_final_position(const PointNavSpec& spec, const Trajectory& t) {
  if (t.steps.empty()) throw std::invalid_argument("pointnav_final_position: empty trajectory");
  const Step& last = t.steps.back();
  return clamp_move(spec, pointnav_position(spec, last.state), last.action);
}

pref::GeometricEndpoint pointnav_endpoint(const PointNavSpec& spec, const Trajectory& t) {
  const auto [x, y] = pointnav_final_position(spec, t);
  return pref::GeometricEndpoint::from_xy(static_cast<double>(x), static_cast<double>(y));
}

std::size_t octant_of(double angle) {
  const double sector = std::numbers::pi / 4.0;
  const auto k = static_cast<long>(std::floor(pref::wrap_angle(angle) / sector + 0.5));
  return static_cast<std::size_t>(((k % 8) + 8) % 8);
}

// ---------------------------------------------------------------------------
// Built-ins

std::vector<std::string> builtin_ids() {
  return {"bandit3", "chain", "gridworld", "harvest", "intransitive-chain", "pointnav"};
}

namespace {

TabularMDP make_bandit3() {
  TabularMDP mdp(1, 3, 1);
  for (std::size_t a = 0; a < 3; ++a) mdp.set_deterministic(0, a, 0);
  return mdp;
}

// Two states; action 0 tends to stay, action 1 tends to switch.
TabularMDP make_chain() {
  TabularMDP mdp(2, 2, 3);
  for (std::size_t s = 0; s < 2; ++s) {
    const int other = static_cast<int>(1 - s);
    mdp.set_transition(s, 0, {{static_cast<int>(s), 0.8}, {other, 0.2}});
    mdp.set_transition(s, 1, {{other, 0.7}, {static_cast<int>(s), 0.3}});
  }
  mdp.set_reward({0.0, 0.1, 1.0, 0.5});
  return mdp;
}

// 5x5 grid, actions stay/up/down/left/right, start (0,0), goal (4,4). The
// reward for acting in cell c is (8 - manhattan(c, goal)) / 8.
TabularMDP make_gridworld() {
  constexpr int side = 5;
  TabularMDP mdp(side * side, 5, 12);
  constexpr std::array<std::pair<int, int>, 5> moves = {{{0, 0}, {0, 1}, {0, -1}, {-1, 0}, {1, 0}}};
  std::vector<double> reward(mdp.states() * mdp.actions());
  for (int x = 0; x < side; ++x) {
    for (int y = 0; y < side; ++y) {
      const auto s = static_cast<std::size_t>(x * side + y);
      for (std::size_t a = 0; a < moves.size(); ++a) {
        const int nx = std::clamp(x + moves[a].first, 0, side - 1);
        const int ny = std::clamp(y + moves[a].second, 0, side - 1);
        mdp.set_deterministic(s, a, static_cast<std::size_t>(nx * side + ny));
        reward[s * mdp.actions() + a] = (8.0 - ((side - 1 - x) + (side - 1 - y))) / 8.0;
      }
    }
  }
  mdp.set_reward(std::move(reward));
  return mdp;
}

TabularMDP make_harvest() {
  TabularMDP mdp(1, 3, kHarvestHorizon);
  for (std::size_t a = 0; a < 3; ++a) mdp.set_deterministic(0, a, 0);
  mdp.set_reward({0.0, 0.5, 1.0});
  return mdp;
}

// The next state follows the action with probability 0.8.
TabularMDP make_intransitive_chain() {
  TabularMDP mdp(2, 2, 3);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a) mdp.set_transition(s, a, {{static_cast<int>(a), 0.8}, {static_cast<int>(1 - a), 0.2}});
  return mdp;
}

}  // namespace

TabularMDP builtin_mdp(const std::string& id) {
  if (id == "bandit3") return make_bandit3();
  if (id == "chain") return make_chain();
  if (id == "gridworld") return make_gridworld();
  if (id == "harvest") return make_harvest();
  if (id == "intransitive-chain") return make_intransitive_chain();
  if (id == "pointnav") return make_pointnav();
  throw std::invalid_argument("unknown built-in environment '" + id + "'");
}

std::size_t intransitive_chain_class(const Trajectory& t) {
  long total = 0;
  for (const auto& st : t.steps) total += st.action + st.state;
  return static_cast<std::size_t>(total % 3);
}

}  // namespace spo::env
