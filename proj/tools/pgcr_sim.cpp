// pgcr-sim: run, sweep and check recommendation experiments.
//
//   pgcr-sim run experiment.cfg --out results/toy
//   pgcr-sim sweep experiment.cfg --vary algorithm.kind=pgcr,linucb,egreedy
//   pgcr-sim check
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pgcr/checks.hpp"
#include "pgcr/config.hpp"
#include "pgcr/harness.hpp"
#include "pgcr/report.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeFault = 2;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("config", f.config_path, "Experiment config file")->required();
  cmd->add_option("--out", f.out, "Output path prefix");
  cmd->add_option("--seed", f.seed, "Base seed");
  cmd->add_option("--replications", f.replications, "Number of replications");
  cmd->add_option("--set", f.overrides, "Override a config key (key=value), repeatable");
  cmd->add_flag("--quiet", f.quiet, "Only print errors");
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw pgcr::ConfigError("expected key=value, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

pgcr::RunConfig load(const CommonFlags& f) {
  auto config = pgcr::load_config(f.config_path);
  for (const auto& o : f.overrides) {
    const auto [key, value] = split_assignment(o);
    pgcr::set_config_value(config, key, value);
  }
  if (f.out) config.run.output = *f.out;
  if (f.seed) config.run.seed = *f.seed;
  if (f.replications) config.run.replications = *f.replications;
  pgcr::validate(config);
  return config;
}

pgcr::PlotLabels labels_for(const pgcr::RunConfig& config) {
  const bool reward = pgcr::headline_metric(config) == pgcr::Metric::kAverageReward;
  return {pgcr::to_string(config.env.kind), "step", reward ? "average reward" : "cumulative regret"};
}

pgcr::Summary execute(const pgcr::RunConfig& config, const std::string& label, bool quiet) {
  const auto traces = pgcr::run_replications(config, [&](std::size_t i) {
    if (!quiet) std::fprintf(stderr, "  %s: replication %zu done\n", label.c_str(), i);
  });
  auto summary = pgcr::aggregate(traces, pgcr::headline_metric(config), label);
  if (!quiet)
    std::printf("%-24s final mean %.6g  std %.6g  (%zu replications, T=%lld)\n", label.c_str(), summary.mean.back(),
                summary.std.back(), traces.size(), static_cast<long long>(config.run.horizon));
  return summary;
}

int cmd_run(const CommonFlags& f) {
  const auto config = load(f);
  const auto summary = execute(config, pgcr::to_string(config.algorithm.kind), f.quiet);
  pgcr::write_csv(summary, config.run.output + ".csv");
  pgcr::emit_plot(std::span(&summary, 1), config.run.output + ".svg", labels_for(config));
  if (!f.quiet) std::printf("wrote %s.csv and %s.svg\n", config.run.output.c_str(), config.run.output.c_str());
  return 0;
}

int cmd_sweep(const CommonFlags& f, const std::string& vary) {
  const auto base = load(f);
  const auto [key, list] = split_assignment(vary);
  std::vector<std::string> values;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) values.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.empty()) throw pgcr::ConfigError("--vary needs at least one value for " + key);
  // Validate the whole grid before spending time on any of it.
  std::vector<pgcr::RunConfig> grid;
  for (const auto& v : values) {
    auto c = base;
    pgcr::set_config_value(c, key, v);
    pgcr::validate(c);
    grid.push_back(c);
  }
  std::vector<pgcr::Summary> summaries;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::string label = key + "=" + values[i];
    summaries.push_back(execute(grid[i], label, f.quiet));
    pgcr::write_csv(summaries.back(), base.run.output + "_" + values[i] + ".csv");
  }
  pgcr::emit_plot(summaries, base.run.output + ".svg", labels_for(base));
  if (!f.quiet) std::printf("wrote %zu csv files and %s.svg\n", summaries.size(), base.run.output.c_str());
  return 0;
}

int cmd_check(bool quiet) {
  namespace ck = pgcr::checks;
  const std::vector<ck::CheckResult> results = {ck::gradient_correctness(), ck::marginal_oracle(),
                                                ck::structural_invariants()};
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    if (!quiet || !r.passed) std::printf("%s\n", ck::format(r).c_str());
  }
  return ok ? 0 : kRuntimeFault;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate contextual recommendation agents"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Run every replication of one config, write CSV and SVG");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  std::string vary;
  auto* sweep = app.add_subcommand("sweep", "Run a config once per value of one key");
  add_common(sweep, sweep_flags);
  sweep->add_option("--vary", vary, "key=v1,v2,...")->required();

  bool check_quiet = false;
  auto* check = app.add_subcommand("check", "Run the quick oracle and invariant checks");
  check->add_flag("--quiet", check_quiet, "Only print failures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep) return cmd_sweep(sweep_flags, vary);
    if (*check) return cmd_check(check_quiet);
  } catch (const pgcr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const pgcr::SchemaError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeFault;
  }
  return 0;
}
