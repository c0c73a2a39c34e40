#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pgcr/envs.hpp"

namespace pgcr {
namespace {

TEST(ToyEnv, NoiselessLinearReward) {
  ToyConfig c;
  c.dim = 3;
  c.noise_r = 0.0;
  c.w_r = (Eigen::VectorXd(3) << 1, 0, 0).finished();
  ToyBanditEnv env(c, 1);
  Rng rng = make_rng(1);
  EXPECT_DOUBLE_EQ(env.reward((Eigen::VectorXd(3) << 0.3, 0.9, 0.1).finished(), rng), 0.3);
}

TEST(ToyEnv, MixedWithZeroBetaPaysNothing) {
  ToyConfig c;
  c.dim = 2;
  c.kind = RewardKind::kMixed;
  c.noise_beta = 0.0;
  c.w_beta = Eigen::VectorXd::Zero(2);
  ToyBanditEnv env(c, 2);
  Rng rng = make_rng(2);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(env.reward(Eigen::VectorXd::Constant(2, 0.8), rng), 0.0);
}

TEST(ToyEnv, BernoulliOracleAndEmpiricalMean) {
  ToyConfig c;
  c.dim = 2;
  c.kind = RewardKind::kBernoulli;
  c.noise_beta = 0.0;
  c.w_beta = (Eigen::VectorXd(2) << 0.7, 0.0).finished();
  ToyBanditEnv env(c, 3);
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 1.0, 0.5).finished();
  EXPECT_DOUBLE_EQ(env.oracle(CandidateSet(x)).value(), 0.7);
  Rng rng = make_rng(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += env.reward(x, rng);
  EXPECT_NEAR(sum / 1e5, 0.7, 0.005);
}

TEST(ToyEnv, MixedOracleIsProductOfParts) {
  ToyConfig c;
  c.dim = 4;
  c.kind = RewardKind::kMixed;
  ToyBanditEnv env(c, 4);
  Rng rng = make_rng(4);
  const CandidateSet set = env.sample_candidates(rng);
  const Eigen::VectorXd o = env.oracle(set);
  for (Eigen::Index j = 0; j < set.cols(); ++j)
    EXPECT_NEAR(o[j], env.beta(set.col(j)) * env.w_r().dot(set.col(j)), 1e-15);
}

TEST(ToyEnv, ContextsInUnitCubeAndWeightsCentered) {
  ToyBanditEnv env(ToyConfig{}, 5);
  Rng rng = make_rng(5);
  const CandidateSet set = env.sample_candidates(rng);
  EXPECT_EQ(set.rows(), 40);
  EXPECT_EQ(set.cols(), 5);
  EXPECT_TRUE((set.array() > 0).all() && (set.array() < 1).all());
  // Mean of w^T c over the cube is sum(w) / 2.
  EXPECT_NEAR(env.w_r().sum() / 2, 0.5, 1e-12);
  EXPECT_TRUE((env.w_r().array() >= 0).all());
}

TEST(ToyEnv, OracleMonteCarloAgreement) {
  ToyConfig c;
  c.dim = 5;
  c.kind = RewardKind::kMixed;
  ToyBanditEnv env(c, 6);
  Rng rng = make_rng(6);
  const CandidateSet set = env.sample_candidates(rng);
  const Eigen::VectorXd o = env.oracle(set);
  // Noise on beta shifts the mean only through clipping, which does not bind here.
  for (Eigen::Index j = 0; j < set.cols(); ++j) {
    ASSERT_GT(env.beta(set.col(j)), 0.2);
    ASSERT_LT(env.beta(set.col(j)), 0.8);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double r = env.reward(set.col(j), rng);
      sum += r;
      sq += r * r;
    }
    const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, o[j], 4 * se);
  }
}

TEST(ToyEnv, StepBeforeResetIsInvalid) {
  ToyBanditEnv env(ToyConfig{}, 7);
  EXPECT_THROW(env.step(0), InvalidStateError);
  env.reset();
  EXPECT_THROW(env.step(5), std::invalid_argument);
  EXPECT_NO_THROW(env.step(4));
}

MdpCrConfig small_mdp() {
  MdpCrConfig c;
  c.dim = 4;
  c.candidates = 3;
  c.users = 5;
  c.catalog = 8;
  c.session_length = 6;
  return c;
}

TEST(MdpCr, StepBeforeResetIsInvalid) {
  MdpCrEnv env(small_mdp(), 1);
  EXPECT_THROW(env.step(0), InvalidStateError);
  EXPECT_THROW(env.oracle_means(), InvalidStateError);
}

TEST(MdpCr, ShiftRegisterState) {
  MdpCrEnv env(small_mdp(), 2);
  const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(15, 1, 15);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(4, -0.5);
  const Eigen::VectorXd next = env.next_state(s, x, 1.0);
  EXPECT_EQ(next.head(10), s.tail(10));
  EXPECT_EQ(next.segment(10, 4), x);
  EXPECT_EQ(next[14], 1.0);
}

TEST(MdpCr, StepAppendsChosenItemAndFeedback) {
  MdpCrEnv env(small_mdp(), 3);
  const auto first = env.reset();
  EXPECT_TRUE(first->state.isZero());
  const Eigen::VectorXd item = first->candidates.col(1);
  const auto r = env.step(1);
  const auto now = env.current();
  EXPECT_EQ(now->state.segment(10, 4), item);
  EXPECT_EQ(now->state[14], r.reward);
  EXPECT_TRUE(now->state.head(10).isZero());
}

TEST(MdpCr, SessionsEndAndRestartEmpty) {
  MdpCrEnv env(small_mdp(), 4);
  env.reset();
  for (int t = 1; t <= 6; ++t) {
    const auto r = env.step(0);
    EXPECT_EQ(r.episode_end, t == 6);
  }
  EXPECT_TRUE(env.current()->state.isZero());
}

TEST(MdpCr, ZeroPreferenceGivesHalf) {
  MdpCrEnv env(small_mdp(), 5);
  env.set_preferences(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(4 * 4)));
  env.reset();
  for (int t = 0; t < 4; ++t) {
    EXPECT_TRUE(env.oracle_means().isApprox(Eigen::VectorXd::Constant(3, 0.5)));
    env.step(t % 3);
  }
}

TEST(MdpCr, CandidatesComeFromActiveCatalog) {
  MdpCrEnv env(small_mdp(), 6);
  env.reset();
  for (int t = 0; t < 20; ++t) {
    const auto obs = env.current();
    const auto& catalog = env.users()[env.active_user()].catalog;
    for (Eigen::Index j = 0; j < obs->candidates.cols(); ++j) {
      bool found = false;
      for (Eigen::Index k = 0; k < catalog.cols(); ++k) found |= catalog.col(k) == obs->candidates.col(j);
      EXPECT_TRUE(found);
    }
    env.step(0);
  }
}

TEST(MdpCr, FeaturesSignTheInteractions) {
  MdpCrEnv env(small_mdp(), 7);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(15);
  s.segment(10, 4) = Eigen::VectorXd::Constant(4, 2.0);
  s[14] = 0.0;  // disliked
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(4, 0.5);
  const Eigen::VectorXd f = env.features(s, c);
  ASSERT_EQ(f.size(), 16);
  EXPECT_EQ(f.head(4), c);
  EXPECT_TRUE(f.segment(4, 8).isZero());
  EXPECT_TRUE(f.tail(4).isApprox(Eigen::VectorXd::Constant(4, -1.0)));
}

DatasetSchema schema() {
  DatasetSchema s;
  s.user_column = "user";
  s.label_column = "clicked";
  s.numeric_columns = {"x"};
  s.categorical_columns = {"genre"};
  s.hash_budget = 4;
  return s;
}

TEST(Dataset, HeaderOnlyFileHasNoRows) {
  std::istringstream in("user,clicked,x,genre\n");
  try {
    parse_dataset(in, schema());
    FAIL() << "expected an error";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("no data rows"), std::string::npos);
  }
}

TEST(Dataset, MissingColumnAndBadValue) {
  std::istringstream missing("user,clicked,x\nu,1,0.5\n");
  EXPECT_THROW(parse_dataset(missing, schema()), SchemaError);
  std::istringstream bad("user,clicked,x,genre\nu,1,0.5,pop\nu,1,abc,pop\n");
  try {
    parse_dataset(bad, schema());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 3u);
  }
}

TEST(Dataset, FeaturesAndHashing) {
  std::istringstream in("user,clicked,x,genre\nu,1,0.5,\"rock, indie\"\n");
  const auto rows = parse_dataset(in, schema());
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].features.size(), 5);
  EXPECT_EQ(rows[0].features[0], 0.5);
  EXPECT_EQ(rows[0].features.tail(4).sum(), 1.0);
  EXPECT_EQ(rows[0].features[1 + static_cast<Eigen::Index>(categorical_bucket("genre", "rock, indie", 4))], 1.0);
}

TEST(Dataset, ServesOneUserPerStepAndPaysLabel) {
  std::istringstream in(
      "user,clicked,x,genre\n"
      "a,1,0.1,pop\na,0,0.2,pop\nb,1,0.3,rock\nb,1,0.4,rock\nb,0,0.5,jazz\nc,1,0.6,pop\n");
  DatasetEnv env(parse_dataset(in, schema()), 2, 3);
  EXPECT_EQ(env.eligible_users(), 2u);
  EXPECT_EQ(env.excluded_users(), 1u);
  env.reset();
  for (int t = 0; t < 50; ++t) {
    const auto& served = env.served_rows();
    ASSERT_EQ(served.size(), 2u);
    EXPECT_NE(served[0], served[1]);
    EXPECT_EQ(env.rows()[served[0]].user, env.rows()[served[1]].user);
    const double label = env.rows()[served[1]].label;
    EXPECT_EQ(env.step(1).reward, label);
  }
}

TEST(Dataset, SingleCandidateComesFromPickedUser) {
  std::istringstream in("user,clicked,x,genre\na,1,0.1,pop\nb,0,0.2,pop\n");
  DatasetEnv env(parse_dataset(in, schema()), 1, 4);
  env.reset();
  for (int t = 0; t < 10; ++t) {
    EXPECT_EQ(env.oracle_means()[0], env.rows()[env.served_rows()[0]].label);
    env.step(0);
  }
}

}  // namespace
}  // namespace pgcr
