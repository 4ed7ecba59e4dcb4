#include "spo/selfplay.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace spo::sp {

std::vector<double> spo_loss(const pref::PreferenceMatrix& m, std::span<const double> p) {
  const std::size_t n = m.size();
  if (p.size() != n) throw std::invalid_argument("spo_loss: dimension mismatch");
  std::vector<double> loss(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * p[j];
    loss[i] = -acc;
  }
  return loss;
}

namespace {

void emit(const RunOptions& options, std::size_t t, std::size_t T, std::span<const double> current,
          std::span<const double> sum, double regret, std::size_t queries) {
  if (!options.onProgress || options.recordEvery == 0) return;
  if (t % options.recordEvery != 0 && t != T) return;
  std::vector<double> avg(sum.begin(), sum.end());
  for (double& v : avg) v /= static_cast<double>(t);
  options.onProgress({t, current, avg, regret, queries});
}

std::vector<double> average_of(const std::vector<double>& sum, std::size_t t) {
  std::vector<double> avg = sum;
  for (double& v : avg) v /= static_cast<double>(t);
  return avg;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

SelfPlayRun run_selfplay_fullfeedback(const pref::PreferenceMatrix& m, learn::OnlineLearner& learner, std::size_t T,
                                      const RunOptions& options) {
  const std::size_t n = m.size();
  if (learner.size() != n) throw std::invalid_argument("run_selfplay_fullfeedback: learner size differs from the game");
  if (T == 0) throw std::invalid_argument("run_selfplay_fullfeedback: T must be positive");
  SelfPlayRun run;
  std::vector<double> sum(n, 0.0);
  for (std::size_t t = 1; t <= T; ++t) {
    const std::vector<double> p = learner.strategy();
    for (std::size_t i = 0; i < n; ++i) sum[i] += p[i];
    if (options.keepIterates) run.iterates.push_back(p);
    learner.update(spo_loss(m, p));
    run.queryCount += n * n;
    emit(options, t, T, p, sum, learner.regret(), run.queryCount);
  }
  run.rounds = T;
  run.averageStrategy = average_of(sum, T);
  run.realizedRegret = learner.regret();
  return run;
}

std::pair<SelfPlayRun, SelfPlayRun> run_selfplay_dueling_check(const pref::PreferenceMatrix& m,
                                                               const learn::LearnerFactory& factory, std::size_t T) {
  const std::size_t n = m.size();
  auto row = factory(n);
  auto col = factory(n);
  SelfPlayRun first, second;
  std::vector<double> sumP(n, 0.0), sumQ(n, 0.0);
  for (std::size_t t = 1; t <= T; ++t) {
    const std::vector<double> p = row->strategy();
    const std::vector<double> q = col->strategy();
    if (!bit_equal(p, q)) throw std::logic_error("dueling protocol diverged from self-play at round " + std::to_string(t));
    first.iterates.push_back(p);
    second.iterates.push_back(q);
    for (std::size_t i = 0; i < n; ++i) {
      sumP[i] += p[i];
      sumQ[i] += q[i];
    }
    // Row player: loss of i against q. Column player: its own payoff P(p, j).
    std::vector<double> rowLoss = spo_loss(m, q);
    std::vector<double> colLoss(n);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += m(i, j) * p[i];
      colLoss[j] = acc;
    }
    row->update(rowLoss);
    col->update(colLoss);
    first.queryCount += n * n;
    second.queryCount += n * n;
  }
  first.rounds = second.rounds = T;
  first.averageStrategy = average_of(sumP, T);
  second.averageStrategy = average_of(sumQ, T);
  first.realizedRegret = row->regret();
  second.realizedRegret = col->regret();
  return {std::move(first), std::move(second)};
}

SelfPlayRun run_selfplay_bandit(const pref::PreferenceMatrix& m, const BanditRunConfig& cfg, const RunOptions& options) {
  const std::size_t n = m.size();
  if (cfg.T == 0) throw std::invalid_argument("run_selfplay_bandit: T must be positive");
  learn::BanditFeedbackConfig fb{cfg.alpha, cfg.gamma < 0.0 ? learn::BanditFeedbackConfig::default_gamma(n, cfg.T) : cfg.gamma};
  fb.validate();
  if (!(fb.gamma > 0.0)) throw std::invalid_argument("run_selfplay_bandit: gamma must be positive");
  learn::HedgeState hedge(n, cfg.eta > 0.0 ? cfg.eta : learn::HedgeState::default_eta(n, cfg.T));
  CounterRng rng(cfg.seed);
  SelfPlayRun run;
  std::vector<double> sum(n, 0.0);
  for (std::size_t t = 1; t <= cfg.T; ++t) {
    const std::vector<double> played = learn::mix_with_uniform(hedge.strategy(), fb.gamma);
    for (std::size_t i = 0; i < n; ++i) sum[i] += played[i];
    if (options.keepIterates) run.iterates.push_back(played);
    const std::size_t i = sample_categorical(played, rng);
    const std::size_t j = sample_categorical(played, rng);
    const double observed = m(i, j);
    ++run.queryCount;
    hedge.update(learn::bandit_loss_estimate(fb, played, i, j, observed));
    emit(options, t, cfg.T, played, sum, hedge.regret(), run.queryCount);
  }
  run.rounds = cfg.T;
  run.averageStrategy = average_of(sum, cfg.T);
  run.realizedRegret = hedge.regret();
  return run;
}

// ---------------------------------------------------------------------------
// History-level self-play

std::vector<double> trajectory_preference_table(const env::TabularMDP& mdp, pref::PreferenceOracle& oracle) {
  const env::HistoryCodec codec(mdp.states(), mdp.actions(), mdp.horizon());
  const std::uint64_t N = codec.trajectory_count();
  if (N > kMaxTableTrajectories) throw std::length_error("trajectory_preference_table: too many trajectories");
  std::vector<pref::Trajectory> trajs;
  trajs.reserve(N);
  for (std::uint64_t id = 0; id < N; ++id) trajs.push_back(env::make_trajectory(mdp, codec.decode_trajectory(id)));
  std::vector<double> table(N * N, 0.0);
  for (std::uint64_t u = 0; u < N; ++u) {
    for (std::uint64_t v = u + 1; v < N; ++v) {
      const double value = oracle.compare(trajs[u], trajs[v]);
      table[u * N + v] = value;
      table[v * N + u] = -value;
    }
  }
  return table;
}

namespace {

std::vector<double> table_times(std::span<const double> table, std::span<const double> dist) {
  const std::size_t N = dist.size();
  std::vector<double> out(N, 0.0);
  for (std::size_t u = 0; u < N; ++u) {
    double acc = 0.0;
    const double* row = table.data() + u * N;
    for (std::size_t v = 0; v < N; ++v)
      if (dist[v] != 0.0) acc += row[v] * dist[v];
    out[u] = acc;
  }
  return out;
}

}  // namespace

TabularSpoRun run_spo_tabular(const env::TabularMDP& mdp, pref::PreferenceOracle& oracle, const TabularSpoConfig& cfg,
                              const TabularRoundFn& onRound) {
  if (cfg.T == 0) throw std::invalid_argument("run_spo_tabular: T must be positive");
  mdp.validate();
  const env::HistoryCodec codec(mdp.states(), mdp.actions(), mdp.horizon());
  const std::size_t H = mdp.horizon();
  const std::size_t nA = mdp.actions();
  const std::uint64_t N = codec.trajectory_count();
  const std::vector<double> table = trajectory_preference_table(mdp, oracle);

  TabularSpoRun run;
  run.eta = cfg.eta > 0.0 ? cfg.eta : learn::HedgeState::default_eta(nA, cfg.T);
  run.queries = static_cast<std::size_t>(N * (N - 1) / 2);
  auto policy = env::TabularHistoryPolicy::uniform(mdp, env::PolicyMode::Full);
  std::vector<std::vector<learn::HedgeState>> hedges(H);
  for (std::size_t h = 0; h < H; ++h) hedges[h].assign(codec.count(h), learn::HedgeState(nA, run.eta));

  std::vector<double> mixtureSum(N, 0.0);
  std::vector<double> mixture(N, 0.0);
  std::vector<std::vector<double>> value(H);
  std::vector<double> q(nA), gain(nA);
  CounterRng rng(cfg.seed);
  double stderrSum = 0.0;

  for (std::size_t t = 1; t <= cfg.T; ++t) {
    if (cfg.keepPolicies) run.policies.push_back(policy);
    const std::vector<double> dist = env::enumerate_trajectory_distribution(mdp, policy);
    for (std::uint64_t k = 0; k < N; ++k) mixtureSum[k] += dist[k];

    // Policy-dependent reward r_t(xi) = E_{xi' ~ pi_t} P(xi, xi').
    std::vector<double> reward;
    if (cfg.estimator == QEstimator::Exact) {
      reward = table_times(table, dist);
    } else {
      if (cfg.mcSamples < 2) throw std::invalid_argument("run_spo_tabular: MonteCarlo needs at least 2 samples");
      std::vector<std::uint64_t> opponents(cfg.mcSamples);
      for (auto& id : opponents) id = codec.trajectory_id(env::rollout(mdp, policy, rng));
      reward.assign(N, 0.0);
      double roundStderr = 0.0;
      const double M = static_cast<double>(cfg.mcSamples);
      for (std::uint64_t u = 0; u < N; ++u) {
        double s = 0.0, s2 = 0.0;
        for (auto id : opponents) {
          const double v = table[u * N + id];
          s += v;
          s2 += v * v;
        }
        const double mean = s / M;
        reward[u] = mean;
        roundStderr += std::sqrt(std::max(0.0, (s2 - M * mean * mean) / (M - 1.0)) / M);
      }
      stderrSum += roundStderr / static_cast<double>(N);
      run.queries += static_cast<std::size_t>(N) * cfg.mcSamples;
    }
    double self = 0.0;
    for (std::uint64_t k = 0; k < N; ++k)
      if (dist[k] != 0.0) self += dist[k] * reward[k];
    run.maxSelfReward = std::max(run.maxSelfReward, std::abs(self));

    // Backward pass: Q_t^h(phi, a) under pi_t, then the per-history update.
    for (std::size_t h = H; h-- > 0;) {
      const std::uint64_t rows = codec.count(h);
      value[h].assign(rows, 0.0);
      for (std::uint64_t row = 0; row < rows; ++row) {
        const std::size_t s = codec.state_of(row);
        for (std::size_t a = 0; a < nA; ++a) {
          if (h + 1 == H) {
            q[a] = reward[codec.trajectory_id(row, a)];
          } else {
            double acc = 0.0;
            for (const auto& o : mdp.next(s, a)) acc += o.prob * value[h + 1][codec.extend(row, a, static_cast<std::size_t>(o.state))];
            q[a] = acc;
          }
        }
        auto pi = policy.mutable_probs(h, row);
        double v = 0.0;
        for (std::size_t a = 0; a < nA; ++a) v += pi[a] * q[a];
        value[h][row] = v;
        for (std::size_t a = 0; a < nA; ++a) gain[a] = cfg.gain == GainForm::Advantage ? q[a] - v : q[a];
        hedges[h][row].update_gain(gain);
        const std::vector<double> next = hedges[h][row].strategy();
        std::copy(next.begin(), next.end(), pi.begin());
      }
    }

    if (onRound) {
      for (std::uint64_t k = 0; k < N; ++k) mixture[k] = mixtureSum[k] / static_cast<double>(t);
      onRound(t, mixture, policy);
    }
  }
  for (std::uint64_t k = 0; k < N; ++k) mixtureSum[k] /= static_cast<double>(cfg.T);
  run.mixtureDistribution = std::move(mixtureSum);
  run.finalPolicy = std::move(policy);
  if (cfg.estimator == QEstimator::MonteCarlo) run.meanRewardStderr = stderrSum / static_cast<double>(cfg.T);
  return run;
}

double sequential_duality_gap(const env::TabularMDP& mdp, std::span<const double> table, std::span<const double> dist) {
  const std::vector<double> reward = table_times(table, dist);
  return 2.0 * env::history_dp(mdp, reward).optimum;
}

double sequential_gap_bound(std::size_t horizon, std::size_t actions, std::size_t T) {
  return 8.0 * static_cast<double>(horizon) * std::sqrt(std::log(static_cast<double>(actions)) / static_cast<double>(T));
}

// ---------------------------------------------------------------------------
// Contextual

std::vector<double> contextual_gain_estimate(std::span<const double> played, std::span<const std::size_t> samples,
                                             std::span<const double> sampleRewards) {
  if (samples.size() != sampleRewards.size() || samples.empty()) throw std::invalid_argument("contextual_gain_estimate: bad sample list");
  const double k = static_cast<double>(samples.size());
  std::vector<double> gain(played.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t y = samples[i];
    if (!(played[y] > 0.0)) throw std::invalid_argument("contextual_gain_estimate: sampled arm has zero probability");
    gain[y] += sampleRewards[i] / (k * played[y]);
  }
  return gain;
}

ContextualRun run_spo_contextual(const env::ContextualBandit& cb, const ContextualConfig& cfg) {
  if (cfg.k < 2) throw std::invalid_argument("run_spo_contextual: k must be at least 2");
  if (cfg.T == 0) throw std::invalid_argument("run_spo_contextual: T must be positive");
  std::size_t widest = 1;
  for (std::size_t x = 0; x < cb.contexts(); ++x) widest = std::max(widest, cb.arms(x));
  const double eta = cfg.eta > 0.0 ? cfg.eta : learn::HedgeState::default_eta(widest, cfg.T);
  const double gamma = cfg.gamma >= 0.0 ? cfg.gamma : learn::BanditFeedbackConfig::default_gamma(widest, cfg.T);

  std::vector<learn::HedgeState> hedges;
  ContextualRun run;
  for (std::size_t x = 0; x < cb.contexts(); ++x) {
    hedges.emplace_back(cb.arms(x), eta);
    run.averageStrategies.emplace_back(cb.arms(x), 0.0);
  }
  run.visits.assign(cb.contexts(), 0);
  CounterRng rng(cfg.seed);
  std::vector<std::size_t> samples(cfg.k);
  std::vector<double> rewards(cfg.k);
  for (std::size_t t = 1; t <= cfg.T; ++t) {
    const std::size_t x = sample_categorical(cb.context_distribution(), rng);
    const std::vector<double> played = learn::mix_with_uniform(hedges[x].strategy(), gamma);
    for (std::size_t a = 0; a < played.size(); ++a) run.averageStrategies[x][a] += played[a];
    ++run.visits[x];
    for (auto& y : samples) y = sample_categorical(played, rng);
    std::fill(rewards.begin(), rewards.end(), 0.0);
    for (std::size_t i = 0; i < cfg.k; ++i) {
      for (std::size_t j = i + 1; j < cfg.k; ++j) {
        const double v = cb.preference(x, samples[i], samples[j]);
        ++run.queries;
        rewards[i] += v;
        rewards[j] -= v;
      }
    }
    for (double& r : rewards) r /= static_cast<double>(cfg.k - 1);
    hedges[x].update_gain(contextual_gain_estimate(played, samples, rewards));
  }
  for (std::size_t x = 0; x < cb.contexts(); ++x) {
    run.finalStrategies.push_back(hedges[x].strategy());
    if (run.visits[x] > 0)
      for (double& v : run.averageStrategies[x]) v /= static_cast<double>(run.visits[x]);
  }
  return run;
}

}  // namespace spo::sp
