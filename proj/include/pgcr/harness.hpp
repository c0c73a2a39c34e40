#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pgcr/agent.hpp"
#include "pgcr/config.hpp"
#include "pgcr/envs.hpp"

namespace pgcr {

struct StepRecord {
  double reward = 0.0;
  double best = 0.0;    // largest expected reward among the candidates
  double chosen = 0.0;  // expected reward of the chosen candidate
  double regret = 0.0;
  double cumulative_regret = 0.0;
};

struct RunTrace {
  std::vector<StepRecord> steps;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

enum class Metric { kCumulativeRegret, kAverageReward };

// Running mean of realized rewards at every step.
std::vector<double> running_average_reward(const RunTrace& trace);
std::vector<double> cumulative_regret(const RunTrace& trace);
std::vector<double> metric_series(const RunTrace& trace, Metric metric);

// Sequential environments report average reward, bandits cumulative regret.
Metric headline_metric(const RunConfig& config);

// Seeds of one replication; the environment and agent streams are disjoint.
std::uint64_t env_seed(const RunConfig& config, std::size_t replication);
std::uint64_t agent_seed(const RunConfig& config, std::size_t replication);

std::unique_ptr<Environment> make_env(const RunConfig& config, std::uint64_t seed);
std::unique_ptr<Agent> make_agent(const RunConfig& config, const Environment& env, std::uint64_t seed);

// Plays `horizon` steps of env against agent.
RunTrace run_loop(Environment& env, Agent& agent, std::int64_t horizon, Rng& rng);

RunTrace run(const RunConfig& config, std::size_t replication);
// Every replication, in replication order. Runs up to config.run.threads at
// once; `progress` is called (from the worker) as each finishes.
std::vector<RunTrace> run_replications(const RunConfig& config,
                                       const std::function<void(std::size_t)>& progress = {});

struct Summary {
  std::string label;
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
};

Summary aggregate(const std::vector<std::vector<double>>& series, std::string label = "");
Summary aggregate(const std::vector<RunTrace>& traces, Metric metric, std::string label = "");

}  // namespace pgcr
