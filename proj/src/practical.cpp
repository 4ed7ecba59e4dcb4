#include "spo/practical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spo::practical {

TrajectoryQueue::TrajectoryQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("TrajectoryQueue: capacity must be at least 1");
}

void TrajectoryQueue::push(Trajectory xi) {
  entries_.push_back(std::move(xi));
  if (entries_.size() > capacity_) entries_.pop_front();
}

QueueWinRateLabeler::QueueWinRateLabeler(pref::OraclePtr oracle, std::size_t queueSize)
    : oracle_(std::move(oracle)), queue_(queueSize) {
  if (!oracle_) throw std::invalid_argument("QueueWinRateLabeler: null oracle");
}

void QueueWinRateLabeler::warm_up(std::span<const Trajectory> initial, CounterRng&) {
  for (const auto& xi : initial) queue_.push(xi);
}

std::vector<double> QueueWinRateLabeler::label(const Trajectory& xi, CounterRng&) {
  if (queue_.size() == 0) throw std::logic_error("QueueWinRateLabeler: empty queue; warm up first");
  double total = 0.0;
  for (const auto& other : queue_.entries()) total += oracle_->compare(xi, other);
  queries_ += queue_.size();
  const double winRate = total / static_cast<double>(queue_.size());
  queue_.push(xi);
  return env::split_trajectory_reward(xi, winRate);
}

void ImproverConfig::validate() const {
  if (!(stepSize > 0.0)) throw std::invalid_argument("ImproverConfig: stepSize must be positive");
  if (!(rewardRate > 0.0 && rewardRate <= 1.0)) throw std::invalid_argument("ImproverConfig: rewardRate must be in (0, 1]");
  if (!(weightCap >= 1.0)) throw std::invalid_argument("ImproverConfig: weightCap must be at least 1");
  if (!(entropy >= 0.0 && stepSize * entropy < 1.0)) throw std::invalid_argument("ImproverConfig: need 0 <= entropy < 1 / stepSize");
}

SoftPolicyImprover::SoftPolicyImprover(const env::TabularMDP& mdp, ImproverConfig cfg)
    : mdp_(&mdp), cfg_(cfg), policy_(env::TabularHistoryPolicy::uniform(mdp, env::PolicyMode::Markov)) {
  cfg_.validate();
  const std::size_t size = mdp.horizon() * mdp.states() * mdp.actions();
  logits_.assign(size, 0.0);
  reward_.assign(size, 0.0);
  q_.assign(mdp.actions(), 0.0);
  value_.assign(mdp.states(), 0.0);
  nextValue_.assign(mdp.states(), 0.0);
  const std::size_t S = mdp.states();
  reachable_.assign(mdp.horizon() * S, 0);
  for (std::size_t s = 0; s < S; ++s) reachable_[s] = mdp.initial()[s] > 0.0;
  for (std::size_t h = 0; h + 1 < mdp.horizon(); ++h)
    for (std::size_t s = 0; s < S; ++s)
      if (reachable_[h * S + s])
        for (std::size_t a = 0; a < mdp.actions(); ++a)
          for (const auto& o : mdp.next(s, a)) reachable_[(h + 1) * S + static_cast<std::size_t>(o.state)] = 1;
}

double SoftPolicyImprover::reward_estimate(std::size_t h, std::size_t s, std::size_t a) const {
  return reward_.at((h * mdp_->states() + s) * mdp_->actions() + a);
}

void SoftPolicyImprover::observe(const Trajectory& xi, std::span<const double> stepRewards) {
  if (xi.horizon() != mdp_->horizon() || stepRewards.size() != xi.horizon()) {
    throw std::invalid_argument("SoftPolicyImprover::observe: length mismatch");
  }
  const std::size_t S = mdp_->states();
  const std::size_t A = mdp_->actions();
  if (!cfg_.importanceWeighted) {
    for (std::size_t h = 0; h < xi.horizon(); ++h) {
      const auto& st = xi.steps[h];
      double& r = reward_[(h * S + static_cast<std::size_t>(st.state)) * A + static_cast<std::size_t>(st.action)];
      r += cfg_.rewardRate * (stepRewards[h] - r);
    }
    return;
  }
  occupancy_.assign(mdp_->horizon() * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) occupancy_[s] = mdp_->initial()[s];
  for (std::size_t h = 0; h + 1 < mdp_->horizon(); ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      const double d = occupancy_[h * S + s];
      if (d == 0.0) continue;
      const auto pi = policy_.probs(h, s);
      for (std::size_t a = 0; a < A; ++a)
        for (const auto& o : mdp_->next(s, a)) occupancy_[(h + 1) * S + static_cast<std::size_t>(o.state)] += d * pi[a] * o.prob;
    }
  }
  const double keep = 1.0 - cfg_.rewardRate;
  for (double& r : reward_) r *= keep;
  for (std::size_t h = 0; h < xi.horizon(); ++h) {
    const auto s = static_cast<std::size_t>(xi.steps[h].state);
    const auto a = static_cast<std::size_t>(xi.steps[h].action);
    const double weight = std::min(cfg_.weightCap, 1.0 / (occupancy_[h * S + s] * policy_.probs(h, s)[a]));
    reward_[(h * S + s) * A + a] += cfg_.rewardRate * weight * stepRewards[h];
  }
}

void SoftPolicyImprover::improve() {
  const std::size_t S = mdp_->states();
  const std::size_t A = mdp_->actions();
  std::fill(nextValue_.begin(), nextValue_.end(), 0.0);
  for (std::size_t h = mdp_->horizon(); h-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      if (!reachable_[h * S + s]) continue;
      const std::size_t base = (h * S + s) * A;
      auto pi = policy_.mutable_probs(h, s);
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        double q = reward_[base + a];
        if (h + 1 < mdp_->horizon())
          for (const auto& o : mdp_->next(s, a)) q += o.prob * nextValue_[static_cast<std::size_t>(o.state)];
        q_[a] = q;
        v += pi[a] * q;
      }
      value_[s] = v;
      double top = -std::numeric_limits<double>::infinity();
      const double keep = 1.0 - cfg_.stepSize * cfg_.entropy;
      for (std::size_t a = 0; a < A; ++a) {
        logits_[base + a] = keep * logits_[base + a] + cfg_.stepSize * (q_[a] - v);
        top = std::max(top, logits_[base + a]);
      }
      double total = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        logits_[base + a] -= top;
        pi[a] = std::exp(logits_[base + a]);
        total += pi[a];
      }
      for (std::size_t a = 0; a < A; ++a) pi[a] /= total;
    }
    std::swap(value_, nextValue_);
  }
}

void PracticalConfig::validate() const {
  if (T == 0) throw std::invalid_argument("PracticalConfig: T must be positive");
  if (validationSamples == 0) throw std::invalid_argument("PracticalConfig: validationSamples must be positive");
  improver.validate();
}

std::size_t main_initial_state(const env::TabularMDP& mdp) {
  const auto& init = mdp.initial();
  return static_cast<std::size_t>(std::max_element(init.begin(), init.end()) - init.begin());
}

namespace {

void score_checkpoints(const env::TabularMDP& mdp, pref::PreferenceOracle& oracle, const PracticalConfig& cfg, PracticalRun& run) {
  const std::size_t C = run.checkpoints.size();
  run.checkpointScores.assign(C, 0.0);
  CounterRng pick(derive_seed(cfg.seed, 0xC0FFEEULL));
  for (std::size_t m = 0; m < cfg.validationSamples; ++m) {
    const std::size_t opponent = static_cast<std::size_t>(pick() % C);
    const Trajectory rival = env::rollout(mdp, run.checkpoints[opponent], derive_seed(cfg.seed, 2 * m + 1));
    const std::uint64_t shared = derive_seed(cfg.seed, 2 * m + 2);
    for (std::size_t c = 0; c < C; ++c) {
      const Trajectory mine = env::rollout(mdp, run.checkpoints[c], shared);
      run.checkpointScores[c] += oracle.compare(mine, rival);
    }
    run.queries += C;
  }
  for (double& s : run.checkpointScores) s /= static_cast<double>(cfg.validationSamples);
  run.bestIndex = static_cast<std::size_t>(std::max_element(run.checkpointScores.begin(), run.checkpointScores.end()) -
                                           run.checkpointScores.begin());
  run.best = run.checkpoints[run.bestIndex];
}

}  // namespace

PracticalRun run_practical(const env::TabularMDP& mdp, pref::PreferenceOracle& oracle, RewardLabeler& labeler,
                           const PracticalConfig& cfg, const IterationFn& onIteration) {
  cfg.validate();
  mdp.validate();
  const std::size_t every = cfg.checkpointEvery ? cfg.checkpointEvery : std::max<std::size_t>(1, cfg.T / 50);
  const std::size_t s0 = main_initial_state(mdp);
  const std::size_t A = mdp.actions();
  const std::size_t tailStart = cfg.T - cfg.T / 4;

  SoftPolicyImprover improver(mdp, cfg.improver);
  CounterRng rng(cfg.seed);
  std::vector<Trajectory> initial;
  for (std::size_t k = 0; k < cfg.warmUp; ++k) initial.push_back(env::rollout(mdp, improver.policy(), rng));
  labeler.warm_up(initial, rng);

  PracticalRun run;
  run.averageInitialStrategy.assign(A, 0.0);
  run.tailAverageInitialStrategy.assign(A, 0.0);
  for (std::size_t t = 1; t <= cfg.T; ++t) {
    const auto pi0 = improver.policy().probs(0, s0);
    for (std::size_t a = 0; a < A; ++a) {
      run.averageInitialStrategy[a] += pi0[a];
      if (t > tailStart) run.tailAverageInitialStrategy[a] += pi0[a];
    }
    const Trajectory xi = env::rollout(mdp, improver.policy(), rng);
    const std::vector<double> rewards = labeler.label(xi, rng);
    improver.observe(xi, rewards);
    improver.improve();
    if (t % every == 0 || t == cfg.T) {
      if (run.checkpointIterations.empty() || run.checkpointIterations.back() != t) {
        run.checkpoints.push_back(improver.policy());
        run.checkpointIterations.push_back(t);
      }
    }
    if (onIteration) onIteration(t, xi, improver.policy());
  }
  for (double& v : run.averageInitialStrategy) v /= static_cast<double>(cfg.T);
  const std::size_t tailCount = cfg.T - tailStart;
  for (double& v : run.tailAverageInitialStrategy) v /= static_cast<double>(std::max<std::size_t>(1, tailCount));
  run.queries = labeler.queries();
  score_checkpoints(mdp, oracle, cfg, run);
  return run;
}

PracticalRun run_spo_practical(const env::TabularMDP& mdp, pref::OraclePtr oracle, std::size_t queueSize, PracticalConfig cfg,
                               const IterationFn& onIteration) {
  QueueWinRateLabeler labeler(oracle, queueSize);
  cfg.warmUp = queueSize;
  return run_practical(mdp, *oracle, labeler, cfg, onIteration);
}

}  // namespace spo::practical
