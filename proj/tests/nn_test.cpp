#include <gtest/gtest.h>

#include <cmath>

#include "pgcr/nn.hpp"

namespace pgcr::nn {
namespace {

double max_rel_error(const NetParams& a, const NetParams& b) {
  const Eigen::VectorXd x = flatten(a), y = flatten(b);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::abs(x[i] - y[i]) / std::max({std::abs(x[i]), std::abs(y[i]), 1e-6}));
  return worst;
}

TEST(MlpInit, ShapesAndZeroBiases) {
  const auto p = mlp_init({40, 10, 1}, 7);
  ASSERT_EQ(p.layers.size(), 2u);
  EXPECT_EQ(p.layers[0].weight.rows(), 10);
  EXPECT_EQ(p.layers[0].weight.cols(), 40);
  EXPECT_EQ(p.layers[1].weight.rows(), 1);
  EXPECT_EQ(p.layers[1].weight.cols(), 10);
  EXPECT_TRUE(p.layers[0].bias.isZero());
  EXPECT_TRUE(p.layers[1].bias.isZero());
  EXPECT_EQ(p.parameter_count(), 40u * 10 + 10 + 10 + 1);
}

TEST(MlpInit, Deterministic) {
  EXPECT_EQ(flatten(mlp_init({40, 10, 1}, 7)), flatten(mlp_init({40, 10, 1}, 7)));
  EXPECT_NE(flatten(mlp_init({40, 10, 1}, 7)), flatten(mlp_init({40, 10, 1}, 8)));
}

TEST(MlpInit, RejectsSingleSize) { EXPECT_THROW(mlp_init({3}, 1), std::invalid_argument); }

TEST(MlpForward, ZeroNetworkOutputsZero) {
  auto p = mlp_init({4, 6, 2}, 1);
  scale(p, 0.0);
  EXPECT_TRUE(mlp_forward(p, Eigen::VectorXd::Random(4)).output.isZero());
}

TEST(MlpForward, IdentityLayer) {
  NetParams p;
  p.layers.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)});
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 1, 2).finished();
  EXPECT_EQ(mlp_forward(p, x).output, x);
}

TEST(MlpForward, ZeroRateDropoutIsExactNoOp) {
  const auto p = mlp_init({5, 8, 1}, 3);
  Rng rng = make_rng(1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 7);
  DropoutSpec d{1, 0.0, std::nullopt};
  const auto plain = mlp_forward_batch(p, x);
  const auto dropped = mlp_forward_batch(p, x, &d, rng);
  EXPECT_EQ(plain.output, dropped.output);
  const Eigen::MatrixXd up = Eigen::MatrixXd::Random(1, 7);
  EXPECT_EQ(flatten(mlp_backward(p, plain.cache, up)), flatten(mlp_backward(p, dropped.cache, up)));
}

TEST(MlpForward, DropoutMaskZeroesUnitsAndRescales) {
  NetParams p;
  p.layers.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)});
  p.layers.push_back({Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1)});
  DropoutSpec d{1, 0.5, Eigen::MatrixXd((Eigen::MatrixXd(2, 1) << 1, 0).finished())};
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 3, 5).finished();
  // Only the first hidden unit survives, scaled by 1 / (1 - 0.5).
  EXPECT_DOUBLE_EQ(mlp_forward(p, x, &d).output[0], 6.0);
}

TEST(MlpScoreColumns, MatchesBatchForward) {
  const auto p = mlp_init({6, 9, 1}, 4);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 11);
  const Eigen::VectorXd cols = mlp_score_columns(p, x);
  const Eigen::RowVectorXd batch = mlp_forward_batch(p, x).output.row(0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) EXPECT_NEAR(cols[j], batch[j], 1e-12);
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGrads) {
  const auto p = mlp_init({3, 4, 1}, 2);
  const auto fwd = mlp_forward_batch(p, Eigen::MatrixXd::Random(3, 5));
  EXPECT_TRUE(flatten(mlp_backward(p, fwd.cache, Eigen::MatrixXd(Eigen::MatrixXd::Zero(1, 5)))).isZero());
}

TEST(MlpBackward, LinearLayerOuterProduct) {
  NetParams p;
  p.layers.push_back({Eigen::MatrixXd::Random(2, 3), Eigen::VectorXd::Zero(2)});
  const Eigen::VectorXd x = (Eigen::VectorXd(3) << 1, -2, 0.5).finished();
  const Eigen::VectorXd u = (Eigen::VectorXd(2) << 0.3, -1).finished();
  const auto g = mlp_backward(p, mlp_forward(p, x).cache, u);
  EXPECT_TRUE(g.layers[0].weight.isApprox(u * x.transpose()));
  EXPECT_TRUE(g.layers[0].bias.isApprox(u));
}

TEST(MlpBackward, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = mlp_init({7, 10, 1}, seed);
    Rng rng = make_rng(seed, 5);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(7, 3);
    DropoutSpec d{1, 0.5, std::nullopt};
    d.mask = Eigen::MatrixXd(10, 3);
    for (Eigen::Index j = 0; j < 3; ++j) d.mask->col(j) = sample_dropout_mask(10, 0.5, rng);
    const Eigen::MatrixXd up = Eigen::MatrixXd::Random(1, 3);
    const auto analytic = mlp_backward(p, mlp_forward_batch(p, x, &d).cache, up);
    const auto numeric = finite_diff_grad(
        [&](const NetParams& q) { return (mlp_forward_batch(q, x, &d).output.array() * up.array()).sum(); }, p, 1e-5);
    EXPECT_LT(max_rel_error(analytic, numeric), 1e-4) << "seed " << seed;
  }
}

TEST(FiniteDiff, AnalyticCases) {
  NetParams p;
  p.layers.push_back({(Eigen::MatrixXd(1, 1) << 1).finished(), (Eigen::VectorXd(1) << -2).finished()});
  const auto zero = finite_diff_grad([](const NetParams&) { return 3.0; }, p, 1e-5);
  EXPECT_TRUE(flatten(zero).isZero());
  const auto sq = finite_diff_grad([](const NetParams& q) { return flatten(q).squaredNorm(); }, p, 1e-5);
  EXPECT_NEAR(sq.layers[0].weight(0, 0), 2.0, 1e-8);
  EXPECT_NEAR(sq.layers[0].bias[0], -4.0, 1e-8);
}

TEST(Adam, ZeroGradientLeavesParams) {
  auto p = mlp_init({2, 3, 1}, 1);
  const auto before = flatten(p);
  auto st = adam_init(p);
  adam_step(p, zeros_like(p), st);
  EXPECT_EQ(flatten(p), before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // m1 = (1-b1) g, v1 = (1-b2) g^2; bias correction gives m/sqrt(v) = sign(g).
  NetParams p;
  p.layers.push_back({(Eigen::MatrixXd(1, 1) << 0.7).finished(), (Eigen::VectorXd(1) << 0.0).finished()});
  auto st = adam_init(p, AdamHyper{0.01, 0.9, 0.999, 1e-8});
  auto g = zeros_like(p);
  g.layers[0].weight(0, 0) = 3.5;
  g.layers[0].bias[0] = -0.02;
  adam_step(p, g, st);
  EXPECT_NEAR(p.layers[0].weight(0, 0), 0.7 - 0.01, 1e-8);
  EXPECT_NEAR(p.layers[0].bias[0], 0.01, 1e-6);
}

TEST(Adam, Deterministic) {
  auto a = mlp_init({3, 4, 1}, 9), b = a;
  auto sa = adam_init(a), sb = adam_init(b);
  auto g = mlp_init({3, 4, 1}, 10);
  adam_step(a, g, sa);
  adam_step(b, g, sb);
  EXPECT_EQ(flatten(a), flatten(b));
}

TEST(Adam, NonFiniteGradientThrowsAndLeavesState) {
  auto p = mlp_init({2, 2, 1}, 1);
  const auto before = flatten(p);
  auto st = adam_init(p);
  auto g = zeros_like(p);
  g.layers[0].weight(0, 0) = std::nan("");
  EXPECT_THROW(adam_step(p, g, st), NumericFault);
  EXPECT_EQ(flatten(p), before);
  EXPECT_EQ(st.step, 0);
}

}  // namespace
}  // namespace pgcr::nn
