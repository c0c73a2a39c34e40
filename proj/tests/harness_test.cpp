#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pgcr/config.hpp"
#include "pgcr/harness.hpp"
#include "pgcr/report.hpp"

namespace pgcr {
namespace {

// Always picks the candidate with the largest true mean.
class OracleAgent : public Agent {
 public:
  explicit OracleAgent(const Environment& env) : env_(env) {}
  std::size_t choose(const std::shared_ptr<const Observation>&, Rng&) override {
    const Eigen::VectorXd m = env_.oracle_means();
    Eigen::Index best = 0;
    m.maxCoeff(&best);
    return static_cast<std::size_t>(best);
  }
  void learn(double, bool, Rng&) override {}
  std::string name() const override { return "oracle"; }

 private:
  const Environment& env_;
};

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TEST(RunLoop, TraceLengthAndOracleRegret) {
  ToyConfig c;
  c.dim = 3;
  ToyBanditEnv env(c, 1);
  OracleAgent agent(env);
  Rng rng = make_rng(1);
  const auto trace = run_loop(env, agent, 10, rng);
  ASSERT_EQ(trace.steps.size(), 10u);
  EXPECT_EQ(trace.steps.back().cumulative_regret, 0.0);
}

TEST(RunLoop, RegretIdentity) {
  RunConfig c;
  c.env.kind = EnvKind::kToyBernoulli;
  c.env.dim = 4;
  c.algorithm.kind = AlgoKind::kLinUcb;
  c.run.horizon = 200;
  const auto trace = run(c, 0);
  double sum = 0.0;
  for (const auto& s : trace.steps) {
    EXPECT_DOUBLE_EQ(s.regret, s.best - s.chosen);
    sum += s.regret;
    EXPECT_EQ(s.cumulative_regret, sum);
  }
}

TEST(Run, SameReplicationIsReproducible) {
  for (AlgoKind algo : {AlgoKind::kPgcr, AlgoKind::kPg, AlgoKind::kEGreedy, AlgoKind::kLinUcb, AlgoKind::kGlmUcb,
                        AlgoKind::kTs}) {
    RunConfig c;
    c.env.kind = EnvKind::kMdpCr;
    c.env.dim = 4;
    c.env.mdpcr.users = 3;
    c.env.mdpcr.catalog = 12;
    c.algorithm.kind = algo;
    c.algorithm.hidden = std::vector<std::size_t>{6};
    c.algorithm.batch_size = 8;
    c.algorithm.warmup = 10;
    c.run.horizon = 60;
    const auto a = run(c, 1), b = run(c, 1);
    ASSERT_EQ(a.steps.size(), 60u);
    for (std::size_t i = 0; i < a.steps.size(); ++i) ASSERT_EQ(a.steps[i].reward, b.steps[i].reward) << to_string(algo);
  }
}

TEST(Run, ReplicationsUseDistinctSeeds) {
  RunConfig c;
  EXPECT_NE(env_seed(c, 0), env_seed(c, 1));
  EXPECT_NE(agent_seed(c, 0), env_seed(c, 0));
  EXPECT_NE(agent_seed(c, 0), agent_seed(c, 1));
}

TEST(Run, ThreadCountDoesNotChangeResults) {
  RunConfig c;
  c.env.dim = 4;
  c.algorithm.kind = AlgoKind::kTs;
  c.run.horizon = 100;
  c.run.replications = 3;
  c.run.threads = 1;
  const auto a = run_replications(c);
  c.run.threads = 3;
  const auto b = run_replications(c);
  for (std::size_t r = 0; r < 3; ++r)
    EXPECT_EQ(cumulative_regret(a[r]), cumulative_regret(b[r]));
}

TEST(Metrics, HeadlineDependsOnEnvironment) {
  RunConfig c;
  EXPECT_EQ(headline_metric(c), Metric::kCumulativeRegret);
  c.env.kind = EnvKind::kMdpCr;
  EXPECT_EQ(headline_metric(c), Metric::kAverageReward);
  RunTrace t;
  for (double r : {1.0, 0.0, 0.5}) t.steps.push_back({r, 0, 0, 0, 0});
  const auto avg = running_average_reward(t);
  EXPECT_DOUBLE_EQ(avg[0], 1.0);
  EXPECT_DOUBLE_EQ(avg[1], 0.5);
  EXPECT_DOUBLE_EQ(avg[2], 0.5);
}

TEST(Aggregate, SingleAndConstantTraces) {
  const auto one = aggregate(std::vector<std::vector<double>>{{1, 2, 3}});
  EXPECT_EQ(one.mean, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(one.std, (std::vector<double>{0, 0, 0}));
  const auto two = aggregate(std::vector<std::vector<double>>{{1, 1}, {3, 3}});
  EXPECT_EQ(two.mean, (std::vector<double>{2, 2}));
  EXPECT_EQ(two.std, (std::vector<double>{1, 1}));
  EXPECT_THROW(aggregate(std::vector<std::vector<double>>{}), std::invalid_argument);
  EXPECT_THROW(aggregate(std::vector<std::vector<double>>{{1}, {1, 2}}), std::invalid_argument);
}

TEST(Report, CsvShapeAndRoundTrip) {
  Summary s{"x", {1.0 / 3.0, 2e-17, 12345.678901234}, {0.1, std::sqrt(2.0), 0.0}};
  const auto path = temp_path("pgcr_report_test.csv");
  write_csv(s, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,mean,std");
  int rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  EXPECT_EQ(rows, 3);
  const auto back = read_csv(path);
  ASSERT_EQ(back.mean.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(back.mean[i], s.mean[i], 1e-12 * std::abs(s.mean[i]));
    EXPECT_NEAR(back.std[i], s.std[i], 1e-12 * std::abs(s.std[i]));
  }
  std::filesystem::remove(path);
}

TEST(Report, UnwritablePathIsIoError) {
  EXPECT_THROW(write_csv(Summary{"x", {1}, {0}}, "/nonexistent-dir/out.csv"), IoError);
}

TEST(Report, NothingToPlot) {
  try {
    emit_plot({}, temp_path("pgcr_empty.svg"));
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "nothing to plot");
  }
}

TEST(Report, PlotHasOneLinePerSummary) {
  std::vector<Summary> s{{"alpha", {1, 2, 3}, {0, 0.1, 0.2}}, {"beta", {3, 2, 1}, {0, 0, 0}}};
  const auto svg = render_plot(s, {"title", "step", "regret"});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("alpha"), std::string::npos);
  EXPECT_NE(svg.find("beta"), std::string::npos);
  std::size_t lines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
  EXPECT_EQ(lines, 2u);
}

TEST(Config, EmptyTextGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.env.kind, EnvKind::kToyLinear);
  EXPECT_EQ(c.algorithm.kind, AlgoKind::kPgcr);
  EXPECT_EQ(c.run.horizon, 20000);
  EXPECT_EQ(c.run.replications, 5u);
  EXPECT_EQ(resolved_dim(c.env), 40u);
  EXPECT_EQ(resolved_candidates(c.env), 5u);
}

TEST(Config, UnknownAlgorithmNamesValueAndChoices) {
  try {
    parse_config("algorithm.kind = linucbb\n");
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("linucbb"), std::string::npos);
    EXPECT_NE(msg.find("linucb,"), std::string::npos);
    EXPECT_NE(msg.find("glmucb"), std::string::npos);
  }
}

TEST(Config, NegativeHorizonFailsValidation) {
  EXPECT_THROW(validate(parse_config("run.horizon = -5\n")), ConfigError);
}

TEST(Config, SectionsCommentsAndUnknownKeys) {
  const auto c = parse_config("# comment\n[env]\nkind = mdpcr\n[algorithm]\nhidden = 30, 10\n[run]\nseed = 9\n");
  EXPECT_EQ(c.env.kind, EnvKind::kMdpCr);
  EXPECT_EQ(resolved_hidden(c), (std::vector<std::size_t>{30, 10}));
  EXPECT_EQ(c.run.seed, 9u);
  EXPECT_DOUBLE_EQ(resolved_gamma(c), 0.9);
  EXPECT_EQ(resolved_batch_size(c), 256u);
  try {
    parse_config("env.dimm = 3\nrun.horizn = 4\n");
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("env.dimm"), std::string::npos);
    EXPECT_NE(msg.find("run.horizn"), std::string::npos);
  }
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
}

TEST(Config, LoadMissingFileIsConfigError) { EXPECT_THROW(load_config("/nonexistent/x.cfg"), ConfigError); }

}  // namespace
}  // namespace pgcr
