#include <gtest/gtest.h>

#include <cmath>

#include "pgcr/baselines.hpp"
#include "pgcr/linear_models.hpp"

namespace pgcr {
namespace {

CandidateSet columns(std::initializer_list<std::initializer_list<double>> cols) {
  const auto rows = static_cast<Eigen::Index>(cols.begin()->size());
  CandidateSet c(rows, static_cast<Eigen::Index>(cols.size()));
  Eigen::Index j = 0;
  for (const auto& col : cols) {
    Eigen::Index i = 0;
    for (double v : col) c(i++, j) = v;
    ++j;
  }
  return c;
}

TEST(EGreedy, FullExplorationIsUniform) {
  Rng rng = make_rng(1);
  const Eigen::VectorXd v = (Eigen::VectorXd(4) << 0, 5, 1, 2).finished();
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 10000; ++i) ++counts[egreedy_select(v, 1.0, rng)];
  for (int c : counts) EXPECT_NEAR(c / 1e4, 0.25, 0.02);
}

TEST(EGreedy, GreedyPicksArgmaxWithLowestTie) {
  Rng rng = make_rng(2);
  EXPECT_EQ(egreedy_select((Eigen::VectorXd(2) << 0.1, 0.9).finished(), 0.0, rng), 1u);
  EXPECT_EQ(egreedy_select(Eigen::VectorXd::Constant(3, 0.4), 0.0, rng), 0u);
  EXPECT_THROW(egreedy_select(Eigen::VectorXd(0), 0.1, rng), std::invalid_argument);
}

TEST(EGreedy, UpdateReducesSquaredError) {
  auto net = nn::mlp_init({2, 6, 1}, 3);
  auto opt = nn::adam_init(net, {0.01});
  std::vector<Transition> batch;
  for (int i = 0; i < 16; ++i) {
    const CandidateSet c = (CandidateSet::Random(2, 2).array() + 1.0) / 2.0;
    auto obs = std::make_shared<const Observation>(Observation{Eigen::VectorXd(0), c});
    batch.push_back(Transition{obs, 0, c(0, 0) - c(1, 0), nullptr, std::nullopt, i});
  }
  auto loss = [&] {
    double s = 0.0;
    for (const auto& t : batch) {
      const double e = nn::mlp_forward(net, t.chosen_context()).output[0] - t.reward;
      s += e * e;
    }
    return s;
  };
  const double before = loss();
  for (int k = 0; k < 200; ++k) egreedy_update(net, opt, batch);
  EXPECT_LT(loss(), 0.2 * before);
}

TEST(LinUcb, IdentityPriorScores) {
  auto s = LinearModelState::create(2, 1.0, 1.0);
  const CandidateSet c = columns({{1, 0}, {0, 0.5}});
  const Eigen::VectorXd scores = linucb_scores(s, c);
  EXPECT_DOUBLE_EQ(scores[0], 1.0);
  EXPECT_DOUBLE_EQ(scores[1], 0.5);
  EXPECT_EQ(linucb_select(s, c), 0u);
}

TEST(LinUcb, OneUpdateSolvesRidgeSystem) {
  auto s = LinearModelState::create(2, 1.0, 1.0);
  linucb_update(s, (Eigen::VectorXd(2) << 1, 0).finished(), 1.0);
  // A = diag(2, 1), b = (1, 0), theta = A^-1 b = (0.5, 0).
  EXPECT_TRUE(s.gram.isApprox((Eigen::MatrixXd(2, 2) << 2, 0, 0, 1).finished()));
  EXPECT_TRUE(s.b.isApprox((Eigen::VectorXd(2) << 1, 0).finished()));
  EXPECT_NEAR(s.theta[0], 0.5, 1e-15);
  EXPECT_NEAR(s.theta[1], 0.0, 1e-15);
  EXPECT_TRUE((s.gram_inv * s.gram).isApprox(Eigen::MatrixXd::Identity(2, 2)));
}

TEST(LinUcb, NoExplorationNoDataTiesToFirst) {
  auto s = LinearModelState::create(3, 1.0, 0.0);
  EXPECT_TRUE(linucb_scores(s, CandidateSet::Random(3, 4)).isZero());
  EXPECT_EQ(linucb_select(s, CandidateSet::Random(3, 4)), 0u);
}

TEST(GlmUcb, ZeroWeightsGiveHalfAndWidthDecides) {
  auto s = GlmModelState::create(2, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
  // Longer contexts carry a larger confidence term.
  EXPECT_EQ(glmucb_select(s, columns({{0.1, 0.1}, {1, 1}}), 10), 1u);
}

TEST(GlmUcb, WithoutWidthPicksLargerPredictor) {
  auto s = GlmModelState::create(2, 1.0, 1.0);
  s.weights << 1.0, -1.0;
  EXPECT_DOUBLE_EQ(glm_width(1, 1.0), 0.0);
  EXPECT_EQ(glmucb_select(s, columns({{0, 1}, {1, 0}}), 1), 1u);
}

TEST(GlmUcb, RepeatedPositiveObservationIncreasesPrediction) {
  auto s = GlmModelState::create(2, 1.0, 1.0);
  s.refit_growth = 0.0;  // refit after every observation
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 1, 0.5).finished();
  double prev = logistic(s.weights.dot(x));
  for (int k = 0; k < 30; ++k) {
    glmucb_update(s, {{x, 1.0}});
    const double now = logistic(s.weights.dot(x));
    EXPECT_GT(now, prev);
    EXPECT_LT(now, 1.0);
    prev = now;
  }
  EXPECT_GT(prev, 0.9);
  EXPECT_EQ(s.irls_fallbacks, 0u);
}

TEST(GlmUcb, RefitNeverIncreasesLoss) {
  auto s = GlmModelState::create(3, 1.0, 1.0);
  Rng rng = make_rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd x = Eigen::VectorXd::Random(3);
    s.xs.insert(s.xs.end(), x.data(), x.data() + 3);
    s.ys.push_back(u(rng) < logistic(2 * x[0]) ? 1.0 : 0.0);
  }
  const double before = glm_loss(s, s.weights);
  EXPECT_TRUE(glm_refit(s));
  EXPECT_LE(glm_loss(s, s.weights), before);
  EXPECT_GT(s.weights[0], 0.5);
}

TEST(Thompson, ZeroScaleIsGreedy) {
  auto s = ThompsonState::create(TsModel::kLinear, 2, 1.0, 0.0);
  ts_update(s, (Eigen::VectorXd(2) << 0, 1).finished(), 1.0);
  Rng rng = make_rng(5);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(ts_select(s, columns({{1, 0}, {0, 1}}), rng), 1u);
}

TEST(Thompson, SymmetricPriorSplitsEvenly) {
  auto s = ThompsonState::create(TsModel::kLinear, 2, 1.0, 1.0);
  Rng rng = make_rng(6);
  int first = 0;
  for (int i = 0; i < 100000; ++i) first += ts_select(s, columns({{1, 0}, {0, 1}}), rng) == 0;
  EXPECT_NEAR(first / 1e5, 0.5, 0.005);
}

TEST(Thompson, SamplingIsDeterministicGivenSeed) {
  auto s = ThompsonState::create(TsModel::kLogistic, 3, 1.0, 0.5);
  ts_update(s, Eigen::VectorXd::Ones(3), 1.0);
  Rng a = make_rng(7), b = make_rng(7);
  EXPECT_EQ(ts_sample_parameters(s, a), ts_sample_parameters(s, b));
}

TEST(Thompson, PrecisionFactorTracksPrecision) {
  for (TsModel model : {TsModel::kLinear, TsModel::kLogistic}) {
    auto s = ThompsonState::create(model, 3, 1.0, 0.5);
    for (int k = 0; k < 40; ++k) ts_update(s, Eigen::VectorXd::Random(3), k % 2);
    const Eigen::MatrixXd rebuilt = s.precision_factor.reconstructedMatrix();
    EXPECT_TRUE(rebuilt.isApprox(s.precision, 1e-10));
  }
}

TEST(PgAgent, EqualScoresAreUniformAndZeroCriticGivesZeroGradient) {
  PgAgent pg(0, 2, PgHyper{}, 1);
  const Eigen::VectorXd nu = pg.probs(Eigen::VectorXd(0), CandidateSet::Random(2, 4));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(nu[i], 0.25);
  pg.set_actor(nn::mlp_init({2, 10, 1}, 2));
  auto zero = nn::mlp_init({2, 10, 1}, 3);
  scale(zero, 0.0);
  pg.set_critic(zero);
  auto obs = std::make_shared<const Observation>(Observation{Eigen::VectorXd(0), CandidateSet::Random(2, 4)});
  EXPECT_TRUE(nn::flatten(pg.actor_objective_gradient({Transition{obs, 1, 1.0, nullptr, std::nullopt, 0}})).isZero());
}

TEST(PgAgent, ObjectiveGradientMatchesFiniteDifferences) {
  PgAgent pg(1, 2, PgHyper{}, 1);
  pg.set_actor(nn::mlp_init({3, 10, 1}, 4));
  pg.set_critic(nn::mlp_init({3, 10, 1}, 5));
  auto obs = std::make_shared<const Observation>(Observation{Eigen::VectorXd::Random(1), CandidateSet::Random(2, 3)});
  const std::vector<Transition> batch{Transition{obs, 0, 1.0, nullptr, std::nullopt, 0}};
  const auto analytic = pg.actor_objective_gradient(batch);
  const auto numeric =
      nn::finite_diff_grad([&](const nn::NetParams& p) { return pg.actor_objective(p, batch); }, pg.actor(), 1e-5);
  const Eigen::VectorXd a = nn::flatten(analytic), n = nn::flatten(numeric);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    EXPECT_LT(std::abs(a[i] - n[i]) / std::max({std::abs(a[i]), std::abs(n[i]), 1e-6}), 1e-4);
}

TEST(OnlineAgents, LearnBeforeChooseIsRejected) {
  LinUcbAgent agent(2, 1.0, 1.0);
  Rng rng = make_rng(8);
  EXPECT_THROW(agent.learn(1.0, false, rng), InvalidStateError);
}

TEST(OnlineAgents, ModelsCarryAnInterceptCoordinate) {
  const Eigen::MatrixXd in = Eigen::MatrixXd::Constant(3, 2, 0.5);
  const Eigen::MatrixXd out = with_bias(in);
  ASSERT_EQ(out.rows(), 4);
  EXPECT_TRUE(out.topRows(3).isApprox(in));
  EXPECT_TRUE((out.row(3).array() == 1.0).all());
  EXPECT_EQ(LinUcbAgent(3, 1.0, 1.0).model().gram.rows(), 4);
}

}  // namespace
}  // namespace pgcr
