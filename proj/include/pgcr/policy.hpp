#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pgcr/nn.hpp"
#include "pgcr/types.hpp"

// Score-based stochastic policies over candidate sets: the Multinoulli policy
// with positive scores, its resampling estimate of the marginal choice
// probability, and the per-step softmax used by vanilla policy gradient.
namespace pgcr {

inline constexpr double kScoreClamp = 30.0;

// min(1 + rate * t, cap)
double greed_exponent(std::int64_t t, double rate, double cap);

// exp(clamp(exponent * raw, -30, 30))
double positive_score(double raw, double exponent);

// mu_i / sum_j mu_j. Throws std::invalid_argument on empty or non-positive input.
Eigen::VectorXd normalize_scores(const Eigen::VectorXd& mu);

// Normalizes exp(z) in log space; equal to normalize_scores(exp(z)) whenever
// exp(z) is representable.
Eigen::VectorXd softmax(const Eigen::VectorXd& z);

std::size_t select_action(const Eigen::VectorXd& probs, Rng& rng);

// Lowest index among the maxima.
std::size_t argmax_lowest(const Eigen::VectorXd& values);

// The actor as a score function: raw network output times the greed exponent.
// Dropout, when a mask is supplied, acts on the input of the output layer.
struct ScoreModel {
  const nn::NetParams* actor = nullptr;
  double exponent = 1.0;
  double dropout_rate = 0.0;

  std::size_t dropout_width() const;
};

// Greedy-scaled log-scores exponent * f(state, c) for every column of candidates.
Eigen::VectorXd log_scores(const ScoreModel& model, const Eigen::VectorXd& state,
                           const CandidateSet& candidates,
                           const std::optional<Eigen::VectorXd>& mask);

// Everything that determines one marginal-probability estimate: the target,
// N groups of m-1 resampled competitors (group n occupies columns
// [n*(m-1), (n+1)*(m-1))), and the dropout mask.
struct MarginalSample {
  Eigen::VectorXd state;
  Eigen::VectorXd target;
  Eigen::MatrixXd competitors;
  std::size_t resamples = 1;
  std::optional<Eigen::VectorXd> mask;

  std::size_t group_size() const;
};

// Values of p-hat for every sample.
std::vector<double> marginal_values(const ScoreModel& model, std::span<const MarginalSample> samples);

// sum_k weights[k] * grad p-hat_k with respect to the actor parameters; the
// gradient flows through the target and every competitor score. Optionally
// reports the values.
nn::ParamGrads weighted_marginal_gradient(const ScoreModel& model,
                                          std::span<const MarginalSample> samples,
                                          std::span<const double> weights,
                                          std::vector<double>* values = nullptr);

// One decision step scored by the softmax over the step's own candidates.
struct SoftmaxSample {
  Eigen::VectorXd state;
  CandidateSet candidates;
};

Eigen::VectorXd softmax_probs(const ScoreModel& model, const SoftmaxSample& sample);

// sum_k sum_i weights[k][i] * grad nu_{k,i}.
nn::ParamGrads weighted_softmax_gradient(const ScoreModel& model,
                                         std::span<const SoftmaxSample> samples,
                                         std::span<const Eigen::VectorXd> weights);

}  // namespace pgcr
