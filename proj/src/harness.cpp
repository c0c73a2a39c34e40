#include "pgcr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "pgcr/baselines.hpp"
#include "pgcr/pgcr_agent.hpp"

namespace pgcr {

std::vector<double> running_average_reward(const RunTrace& trace) {
  std::vector<double> out(trace.steps.size());
  double total = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    total += trace.steps[t].reward;
    out[t] = total / static_cast<double>(t + 1);
  }
  return out;
}

std::vector<double> cumulative_regret(const RunTrace& trace) {
  std::vector<double> out(trace.steps.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = trace.steps[t].cumulative_regret;
  return out;
}

std::vector<double> metric_series(const RunTrace& trace, Metric metric) {
  return metric == Metric::kAverageReward ? running_average_reward(trace) : cumulative_regret(trace);
}

Metric headline_metric(const RunConfig& config) {
  return is_sequential(config.env.kind) ? Metric::kAverageReward : Metric::kCumulativeRegret;
}

std::uint64_t env_seed(const RunConfig& config, std::size_t replication) {
  return config.run.seed + replication;
}

std::uint64_t agent_seed(const RunConfig& config, std::size_t replication) {
  // A different stream of the same base, so env and agent never share draws.
  Rng rng = make_rng(config.run.seed + replication, 0x9e3779b97f4a7c15ULL);
  return rng();
}

std::unique_ptr<Environment> make_env(const RunConfig& config, std::uint64_t seed) {
  const auto& e = config.env;
  switch (e.kind) {
    case EnvKind::kToyLinear:
    case EnvKind::kToyBernoulli:
    case EnvKind::kToyMixed: {
      ToyConfig toy;
      toy.dim = resolved_dim(e);
      toy.candidates = resolved_candidates(e);
      toy.kind = e.kind == EnvKind::kToyLinear      ? RewardKind::kLinear
                 : e.kind == EnvKind::kToyBernoulli ? RewardKind::kBernoulli
                                                    : RewardKind::kMixed;
      toy.noise_r = e.noise_r;
      toy.noise_beta = e.noise_beta;
      return std::make_unique<ToyBanditEnv>(toy, seed);
    }
    case EnvKind::kMdpCr: {
      MdpCrConfig m = e.mdpcr;
      m.dim = resolved_dim(e);
      m.candidates = resolved_candidates(e);
      return std::make_unique<MdpCrEnv>(m, seed);
    }
    case EnvKind::kDataset:
      return load_dataset_env(e.path, e.schema, resolved_candidates(e), seed);
  }
  throw ConfigError("unknown environment kind");
}

std::unique_ptr<Agent> make_agent(const RunConfig& config, const Environment& env, std::uint64_t seed) {
  const auto& a = config.algorithm;
  ReplaySchedule replay;
  replay.gamma = resolved_gamma(config);
  replay.batch_size = resolved_batch_size(config);
  replay.warmup = a.warmup;
  replay.update_every = resolved_update_every(config);
  replay.capacity = a.capacity;
  replay.bucket_precision = a.bucket_precision;
  const std::size_t input = env.state_dim() + env.context_dim();
  GlmFitOptions fit{a.refit_growth};
  switch (a.kind) {
    case AlgoKind::kPgcr: {
      AgentHyper h;
      h.candidates = env.candidates();
      h.resamples = a.resamples;
      h.greed_rate = a.greed_rate;
      h.greed_cap = a.greed_cap;
      h.dropout = a.dropout;
      h.actor_lr = a.actor_lr;
      h.critic_lr = a.critic_lr;
      h.hidden = resolved_hidden(config);
      h.replay = replay;
      return std::make_unique<PgcrAgent>(env.state_dim(), env.context_dim(), h, seed);
    }
    case AlgoKind::kPg: {
      PgHyper h{a.actor_lr, a.critic_lr, resolved_hidden(config), replay};
      return std::make_unique<PgAgent>(env.state_dim(), env.context_dim(), h, seed);
    }
    case AlgoKind::kEGreedy: {
      EGreedyHyper h{a.epsilon, a.critic_lr, resolved_hidden(config), replay};
      return std::make_unique<EGreedyAgent>(env.state_dim(), env.context_dim(), h, seed);
    }
    case AlgoKind::kLinUcb:
      return std::make_unique<LinUcbAgent>(input, a.lambda, a.alpha);
    case AlgoKind::kGlmUcb:
      return std::make_unique<GlmUcbAgent>(input, a.lambda, a.kappa, fit);
    case AlgoKind::kTs:
      return std::make_unique<ThompsonAgent>(input, resolved_ts_model(config), a.lambda, a.ts_scale, fit);
  }
  throw ConfigError("unknown algorithm kind");
}

RunTrace run_loop(Environment& env, Agent& agent, std::int64_t horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  RunTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(horizon));
  auto obs = env.reset();
  double total = 0.0;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const Eigen::VectorXd means = env.oracle_means();
    const std::size_t action = agent.choose(obs, rng);
    const EnvStep out = env.step(action);
    agent.learn(out.reward, out.episode_end, rng);
    StepRecord rec;
    rec.reward = out.reward;
    rec.best = means.maxCoeff();
    rec.chosen = means[static_cast<Eigen::Index>(action)];
    rec.regret = rec.best - rec.chosen;
    total += rec.regret;
    rec.cumulative_regret = total;
    trace.steps.push_back(rec);
    obs = env.current();
  }
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

RunTrace run(const RunConfig& config, std::size_t replication) {
  validate(config);
  const auto env = make_env(config, env_seed(config, replication));
  const std::uint64_t seed = agent_seed(config, replication);
  const auto agent = make_agent(config, *env, seed);
  Rng rng = make_rng(seed, 1);
  RunTrace trace = run_loop(*env, *agent, config.run.horizon, rng);
  trace.seed = config.run.seed + replication;
  return trace;
}

std::vector<RunTrace> run_replications(const RunConfig& config, const std::function<void(std::size_t)>& progress) {
  validate(config);
  const std::size_t n = config.run.replications;
  std::size_t threads = config.run.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<RunTrace> traces(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        traces[i] = run(config, i);
        if (progress) progress(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return traces;
}

Summary aggregate(const std::vector<std::vector<double>>& series, std::string label) {
  if (series.empty()) throw std::invalid_argument("aggregate: no traces");
  const std::size_t horizon = series.front().size();
  for (const auto& s : series)
    if (s.size() != horizon) throw std::invalid_argument("aggregate: traces have different horizons");
  Summary out{std::move(label), std::vector<double>(horizon, 0.0), std::vector<double>(horizon, 0.0)};
  const double n = static_cast<double>(series.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    double mean = 0.0;
    for (const auto& s : series) mean += s[t];
    mean /= n;
    double var = 0.0;
    for (const auto& s : series) var += (s[t] - mean) * (s[t] - mean);
    out.mean[t] = mean;
    out.std[t] = std::sqrt(var / n);
  }
  return out;
}

Summary aggregate(const std::vector<RunTrace>& traces, Metric metric, std::string label) {
  std::vector<std::vector<double>> series;
  series.reserve(traces.size());
  for (const auto& t : traces) series.push_back(metric_series(t, metric));
  return aggregate(series, std::move(label));
}

}  // namespace pgcr
