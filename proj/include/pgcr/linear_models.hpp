#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "pgcr/types.hpp"

// Linear and logistic reward models used by the UCB and Thompson Sampling
// baselines. Candidates are columns; argmax ties go to the lowest index.
namespace pgcr {

// Ridge regression with A = lambda*I + sum x x^T and b = sum r x.
struct LinearModelState {
  Eigen::MatrixXd gram;      // A
  Eigen::MatrixXd gram_inv;  // A^-1, kept by Sherman-Morrison
  Eigen::VectorXd b;
  Eigen::VectorXd theta;     // A^-1 b
  double lambda = 1.0;
  double alpha = 1.0;        // UCB exploration weight

  static LinearModelState create(std::size_t dim, double lambda, double alpha);
  std::size_t dim() const { return static_cast<std::size_t>(theta.size()); }
};

Eigen::VectorXd linucb_scores(const LinearModelState& s, const CandidateSet& candidates);
std::size_t linucb_select(const LinearModelState& s, const CandidateSet& candidates);
void linucb_update(LinearModelState& s, const Eigen::VectorXd& x, double reward);

double logistic(double z);

// Logistic regression refit by IRLS (Newton) on every observed pair, on a
// geometric schedule; `gram` is the unweighted design matrix used for the
// confidence width.
struct GlmModelState {
  Eigen::VectorXd weights;
  Eigen::MatrixXd gram;
  Eigen::MatrixXd gram_inv;
  double lambda = 1.0;
  double kappa = 1.0;
  double refit_growth = 0.05;  // refit when history grows by this fraction
  double fallback_lr = 0.1;

  std::vector<double> xs;  // row-major history, dim entries per observation
  std::vector<double> ys;
  std::size_t next_refit = 1;
  std::size_t refits = 0;
  std::size_t irls_fallbacks = 0;

  static GlmModelState create(std::size_t dim, double lambda, double kappa);
  std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t observations() const { return ys.size(); }
};

// kappa * sqrt(log t), zero for t <= 1.
double glm_width(std::int64_t t, double kappa);
Eigen::VectorXd glmucb_scores(const GlmModelState& s, const CandidateSet& candidates, std::int64_t t);
std::size_t glmucb_select(const GlmModelState& s, const CandidateSet& candidates, std::int64_t t);

struct GlmObservation {
  Eigen::VectorXd x;
  double reward;  // clipped into [0,1]
};

void glmucb_update(GlmModelState& s, const std::vector<GlmObservation>& batch);
// Full IRLS on the stored history. Returns false (after taking one gradient
// step instead) when Newton fails to decrease the penalized loss.
bool glm_refit(GlmModelState& s);
// Penalized negative log-likelihood of the stored history.
double glm_loss(const GlmModelState& s, const Eigen::VectorXd& w);

enum class TsModel { kLinear, kLogistic };

// Thompson Sampling over a linear-Gaussian posterior N(theta, v^2 A^-1) or a
// Laplace approximation N(w, v^2 H^-1) of the logistic posterior.
struct ThompsonState {
  TsModel model = TsModel::kLinear;
  double scale = 0.5;  // v
  LinearModelState linear;
  GlmModelState glm;
  Eigen::MatrixXd precision;  // A or H
  Eigen::LLT<Eigen::MatrixXd> precision_factor;

  static ThompsonState create(TsModel model, std::size_t dim, double lambda, double scale);
  const Eigen::VectorXd& mean() const { return model == TsModel::kLinear ? linear.theta : glm.weights; }
};

Eigen::VectorXd ts_sample_parameters(const ThompsonState& s, Rng& rng);
std::size_t ts_select(const ThompsonState& s, const CandidateSet& candidates, Rng& rng);
void ts_update(ThompsonState& s, const Eigen::VectorXd& x, double reward);

}  // namespace pgcr
