#include <gtest/gtest.h>

#include "pgcr/replay.hpp"

namespace pgcr {
namespace {

Transition record(double tag, const Eigen::VectorXd& state = Eigen::VectorXd(0), Eigen::Index dim = 2) {
  CandidateSet c = CandidateSet::Constant(dim, 2, tag);
  c(0, 1) = tag + 0.5;
  auto obs = std::make_shared<const Observation>(Observation{state, c});
  return Transition{obs, 0, tag, nullptr, std::nullopt, static_cast<std::int64_t>(tag)};
}

TEST(ReplayBuffer, RingEvictsOldest) {
  ReplayBuffer b(2);
  b.push(record(1));
  b.push(record(2));
  b.push(record(3));
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.at(0).reward, 2.0);
  EXPECT_EQ(b.at(1).reward, 3.0);
}

TEST(ReplayBuffer, EvictionUpdatesStateIndex) {
  ReplayBuffer b(2, 0.1);
  const Eigen::VectorXd s1 = Eigen::VectorXd::Constant(1, 0.3), s2 = Eigen::VectorXd::Constant(1, 0.9);
  b.push(record(1, s1, 2));
  b.push(record(2, s2, 2));
  b.push(record(3, s2, 2));
  EXPECT_EQ(b.bucket_size(state_bucket(s1, 0.1)), 0u);
  EXPECT_EQ(b.bucket_size(state_bucket(s2, 0.1)), 2u);
}

TEST(ReplayBuffer, SampledContextWasPushed) {
  ReplayBuffer b(10);
  b.push(record(4));
  Rng rng = make_rng(1);
  const Eigen::MatrixXd c = b.sample_contexts(std::nullopt, 1, rng);
  ASSERT_EQ(c.cols(), 1);
  EXPECT_TRUE(c.col(0) == record(4).candidates().col(0) || c.col(0) == record(4).candidates().col(1));
}

TEST(ReplayBuffer, ContextsComeFromStoredMultiset) {
  ReplayBuffer b(10);
  b.push(record(1));
  Rng rng = make_rng(2);
  const Eigen::MatrixXd c = b.sample_contexts(std::nullopt, 50, rng);
  bool saw0 = false, saw1 = false;
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    const bool is0 = c.col(j) == record(1).candidates().col(0), is1 = c.col(j) == record(1).candidates().col(1);
    EXPECT_TRUE(is0 || is1);
    saw0 |= is0;
    saw1 |= is1;
  }
  EXPECT_TRUE(saw0 && saw1);
}

TEST(ReplayBuffer, UnknownBucketFallsBackToGlobalPool) {
  ReplayBuffer b(10);
  b.push(record(1, Eigen::VectorXd::Constant(1, 0.0), 2));
  Rng rng = make_rng(3);
  EXPECT_EQ(b.sample_contexts(state_bucket(Eigen::VectorXd::Constant(1, 5.0)), 3, rng).cols(), 3);
}

TEST(ReplayBuffer, ZeroContextsIsAnError) {
  ReplayBuffer b(10);
  b.push(record(1));
  Rng rng = make_rng(4);
  EXPECT_THROW(b.sample_contexts(std::nullopt, 0, rng), std::invalid_argument);
}

TEST(ReplayBuffer, BatchFromSingleRecord) {
  ReplayBuffer b(10);
  b.push(record(7));
  Rng rng = make_rng(5);
  const auto batch = b.sample_batch(4, rng);
  ASSERT_EQ(batch.size(), 4u);
  for (const auto& t : batch) EXPECT_EQ(t.reward, 7.0);
}

TEST(ReplayBuffer, BatchIsDeterministicGivenSeed) {
  ReplayBuffer a(10), b(10);
  for (int i = 0; i < 6; ++i) {
    a.push(record(i));
    b.push(record(i));
  }
  Rng r1 = make_rng(6), r2 = make_rng(6);
  const auto x = a.sample_batch(8, r1), y = b.sample_batch(8, r2);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].reward, y[i].reward);
}

TEST(ReplayBuffer, EmptyBufferThrows) {
  ReplayBuffer b(10);
  Rng rng = make_rng(7);
  EXPECT_THROW(b.sample_batch(1, rng), EmptyBufferError);
  EXPECT_THROW(b.sample_contexts(std::nullopt, 1, rng), EmptyBufferError);
}

TEST(StateBucket, EmptyStateIsOneBucket) {
  EXPECT_EQ(state_bucket(Eigen::VectorXd(0)), state_bucket(Eigen::VectorXd(0), 0.5));
  EXPECT_EQ(state_bucket(Eigen::VectorXd::Constant(2, 0.31)), state_bucket(Eigen::VectorXd::Constant(2, 0.29)));
  EXPECT_NE(state_bucket(Eigen::VectorXd::Constant(2, 0.3)), state_bucket(Eigen::VectorXd::Constant(2, 0.5)));
}

TEST(Transition, ValidateRejectsOutOfRangeAction) {
  auto t = record(1);
  t.action = 2;
  EXPECT_THROW(validate(t), std::invalid_argument);
}

}  // namespace
}  // namespace pgcr
