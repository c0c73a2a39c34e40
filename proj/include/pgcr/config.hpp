#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pgcr/envs.hpp"
#include "pgcr/linear_models.hpp"

namespace pgcr {

enum class EnvKind { kToyLinear, kToyBernoulli, kToyMixed, kMdpCr, kDataset };
enum class AlgoKind { kPgcr, kPg, kEGreedy, kLinUcb, kGlmUcb, kTs };

struct EnvSpec {
  EnvKind kind = EnvKind::kToyLinear;
  std::optional<std::size_t> dim;         // 40 for toys, 20 for mdpcr
  std::optional<std::size_t> candidates;  // 5 for toys, 10 otherwise
  double noise_r = 0.1;
  double noise_beta = 0.05;
  MdpCrConfig mdpcr;  // dim/candidates come from the fields above
  std::string path;
  DatasetSchema schema;
};

struct AlgoSpec {
  AlgoKind kind = AlgoKind::kPgcr;
  // Policy-gradient family and epsilon-greedy.
  std::size_t resamples = 1;
  double greed_rate = 1e-4;
  double greed_cap = 10.0;
  double dropout = 0.5;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double epsilon = 0.1;
  std::optional<std::vector<std::size_t>> hidden;  // {10} for toys, {60,20} for mdpcr
  std::optional<double> gamma;                     // 0 for bandits, 0.9 for mdpcr
  std::optional<std::size_t> batch_size;           // 64 for toys, 256 for mdpcr
  std::size_t warmup = 100;
  std::optional<std::size_t> update_every;         // 1 for toys
  std::size_t capacity = 100000;
  double bucket_precision = 0.1;
  // Linear-model baselines.
  double lambda = 1.0;
  double alpha = 1.0;
  double kappa = 1.0;
  double ts_scale = 0.5;
  std::optional<TsModel> ts_model;  // linear for toy-linear, logistic otherwise
  double refit_growth = 0.05;
};

struct RunSpec {
  std::int64_t horizon = 20000;
  std::size_t replications = 5;
  std::uint64_t seed = 1;
  std::string output = "pgcr_run";
  std::size_t threads = 0;  // 0: one per hardware thread
};

struct RunConfig {
  EnvSpec env;
  AlgoSpec algorithm;
  RunSpec run;
};

// Parses "section.key = value" lines, or "key = value" under a [section]
// header; '#' starts a comment. Throws ConfigError with the line number on
// malformed input and listing every unknown key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Sets one dotted key; throws ConfigError naming the key or value.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
// Throws ConfigError on out-of-range values.
void validate(const RunConfig& config);

std::vector<std::string> config_keys();
std::string to_string(EnvKind kind);
std::string to_string(AlgoKind kind);

// Concrete values of the "auto" settings.
std::size_t resolved_dim(const EnvSpec& env);
std::size_t resolved_candidates(const EnvSpec& env);
bool is_sequential(EnvKind kind);
double resolved_gamma(const RunConfig& config);
std::vector<std::size_t> resolved_hidden(const RunConfig& config);
std::size_t resolved_batch_size(const RunConfig& config);
std::size_t resolved_update_every(const RunConfig& config);
TsModel resolved_ts_model(const RunConfig& config);

}  // namespace pgcr
