#include "pgcr/linear_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pgcr/policy.hpp"

namespace pgcr {

namespace {

// A^-1 <- A^-1 - (A^-1 x)(A^-1 x)^T / (1 + x^T A^-1 x)
void sherman_morrison(Eigen::MatrixXd& inv, const Eigen::VectorXd& x) {
  const Eigen::VectorXd ax = inv * x;
  const double denom = 1.0 + x.dot(ax);
  if (!(denom > 0.0)) throw std::logic_error("Gram matrix lost positive definiteness");
  inv.noalias() -= (ax * ax.transpose()) / denom;
}

void check_candidates(std::size_t dim, const CandidateSet& candidates) {
  if (candidates.cols() == 0) throw std::invalid_argument("empty candidate set");
  if (static_cast<std::size_t>(candidates.rows()) != dim)
    throw std::invalid_argument("candidate dimension does not match the model");
}

}  // namespace

LinearModelState LinearModelState::create(std::size_t dim, double lambda, double alpha) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge lambda must be positive");
  if (!(alpha >= 0.0)) throw std::invalid_argument("UCB alpha must be non-negative");
  const auto d = static_cast<Eigen::Index>(dim);
  LinearModelState s;
  s.gram = lambda * Eigen::MatrixXd::Identity(d, d);
  s.gram_inv = Eigen::MatrixXd::Identity(d, d) / lambda;
  s.b = Eigen::VectorXd::Zero(d);
  s.theta = Eigen::VectorXd::Zero(d);
  s.lambda = lambda;
  s.alpha = alpha;
  return s;
}

Eigen::VectorXd linucb_scores(const LinearModelState& s, const CandidateSet& candidates) {
  check_candidates(s.dim(), candidates);
  const Eigen::VectorXd mean = candidates.transpose() * s.theta;
  const Eigen::VectorXd var = (candidates.array() * (s.gram_inv * candidates).array()).colwise().sum();
  return mean.array() + s.alpha * var.array().max(0.0).sqrt();
}

std::size_t linucb_select(const LinearModelState& s, const CandidateSet& candidates) {
  return argmax_lowest(linucb_scores(s, candidates));
}

void linucb_update(LinearModelState& s, const Eigen::VectorXd& x, double reward) {
  if (static_cast<std::size_t>(x.size()) != s.dim()) throw std::invalid_argument("linucb_update: dimension mismatch");
  s.gram.noalias() += x * x.transpose();
  s.b += reward * x;
  sherman_morrison(s.gram_inv, x);
  s.theta.noalias() = s.gram_inv * s.b;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

GlmModelState GlmModelState::create(std::size_t dim, double lambda, double kappa) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge lambda must be positive");
  if (!(kappa >= 0.0)) throw std::invalid_argument("GLM-UCB kappa must be non-negative");
  const auto d = static_cast<Eigen::Index>(dim);
  GlmModelState s;
  s.weights = Eigen::VectorXd::Zero(d);
  s.gram = lambda * Eigen::MatrixXd::Identity(d, d);
  s.gram_inv = Eigen::MatrixXd::Identity(d, d) / lambda;
  s.lambda = lambda;
  s.kappa = kappa;
  return s;
}

double glm_width(std::int64_t t, double kappa) {
  return t <= 1 ? 0.0 : kappa * std::sqrt(std::log(static_cast<double>(t)));
}

Eigen::VectorXd glmucb_scores(const GlmModelState& s, const CandidateSet& candidates, std::int64_t t) {
  check_candidates(s.dim(), candidates);
  const Eigen::VectorXd z = candidates.transpose() * s.weights;
  const Eigen::VectorXd var = (candidates.array() * (s.gram_inv * candidates).array()).colwise().sum();
  Eigen::VectorXd out(z.size());
  const double width = glm_width(t, s.kappa);
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = logistic(z[i]) + width * std::sqrt(std::max(var[i], 0.0));
  return out;
}

std::size_t glmucb_select(const GlmModelState& s, const CandidateSet& candidates, std::int64_t t) {
  return argmax_lowest(glmucb_scores(s, candidates, t));
}

namespace {

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> history(
    const GlmModelState& s) {
  return {s.xs.data(), static_cast<Eigen::Index>(s.ys.size()), static_cast<Eigen::Index>(s.dim())};
}

Eigen::Map<const Eigen::VectorXd> targets(const GlmModelState& s) {
  return {s.ys.data(), static_cast<Eigen::Index>(s.ys.size())};
}

double log1pexp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double glm_loss(const GlmModelState& s, const Eigen::VectorXd& w) {
  const auto x = history(s);
  const auto y = targets(s);
  const Eigen::VectorXd z = x * w;
  double loss = 0.5 * s.lambda * w.squaredNorm();
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += log1pexp(z[i]) - y[i] * z[i];
  return loss;
}

bool glm_refit(GlmModelState& s) {
  ++s.refits;
  if (s.ys.empty()) return true;
  const auto x = history(s);
  const auto y = targets(s);
  const auto d = static_cast<Eigen::Index>(s.dim());
  const Eigen::VectorXd start = s.weights;
  Eigen::VectorXd w = start;
  double loss = glm_loss(s, w);
  for (int iter = 0; iter < 25; ++iter) {
    const Eigen::VectorXd z = x * w;
    Eigen::VectorXd p(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = logistic(z[i]);
    const Eigen::VectorXd grad = x.transpose() * (p - y) + s.lambda * w;
    const Eigen::VectorXd curv = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd hess = s.lambda * Eigen::MatrixXd::Identity(d, d);
    hess.noalias() += x.transpose() * curv.asDiagonal() * x;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    const Eigen::VectorXd next = w - step;
    const double next_loss = glm_loss(s, next);
    if (!next.allFinite() || !std::isfinite(next_loss) || next_loss > loss + 1e-9 * (1.0 + std::abs(loss))) {
      // Newton failed: undo and take a single gradient step from the start.
      const Eigen::VectorXd z0 = x * start;
      Eigen::VectorXd p0(z0.size());
      for (Eigen::Index i = 0; i < z0.size(); ++i) p0[i] = logistic(z0[i]);
      const Eigen::VectorXd g0 = x.transpose() * (p0 - y) + s.lambda * start;
      s.weights = start - s.fallback_lr * g0 / static_cast<double>(s.ys.size());
      ++s.irls_fallbacks;
      return false;
    }
    w = next;
    loss = next_loss;
    if (step.norm() < 1e-8 * (1.0 + w.norm())) break;
  }
  s.weights = w;
  return true;
}

void glmucb_update(GlmModelState& s, const std::vector<GlmObservation>& batch) {
  for (const auto& o : batch) {
    if (static_cast<std::size_t>(o.x.size()) != s.dim()) throw std::invalid_argument("glm update: dimension mismatch");
    s.xs.insert(s.xs.end(), o.x.data(), o.x.data() + o.x.size());
    s.ys.push_back(std::clamp(o.reward, 0.0, 1.0));
    s.gram.noalias() += o.x * o.x.transpose();
    sherman_morrison(s.gram_inv, o.x);
  }
  const std::size_t n = s.ys.size();
  if (n >= s.next_refit) {
    glm_refit(s);
    s.next_refit = n + std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(n) * s.refit_growth));
  }
}

ThompsonState ThompsonState::create(TsModel model, std::size_t dim, double lambda, double scale) {
  if (!(scale >= 0.0)) throw std::invalid_argument("Thompson scale must be non-negative");
  ThompsonState s;
  s.model = model;
  s.scale = scale;
  if (model == TsModel::kLinear) s.linear = LinearModelState::create(dim, lambda, 0.0);
  else s.glm = GlmModelState::create(dim, lambda, 0.0);
  const auto d = static_cast<Eigen::Index>(dim);
  s.precision = lambda * Eigen::MatrixXd::Identity(d, d);
  s.precision_factor.compute(s.precision);
  return s;
}

Eigen::VectorXd ts_sample_parameters(const ThompsonState& s, Rng& rng) {
  const Eigen::VectorXd& mean = s.mean();
  if (s.scale == 0.0) return mean;
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  // precision = L L^T, so L^-T z has covariance precision^-1.
  return mean + s.scale * s.precision_factor.matrixU().solve(z);
}

std::size_t ts_select(const ThompsonState& s, const CandidateSet& candidates, Rng& rng) {
  check_candidates(static_cast<std::size_t>(s.mean().size()), candidates);
  const Eigen::VectorXd draw = ts_sample_parameters(s, rng);
  // The logistic link is monotone, so ranking by the linear predictor suffices.
  return argmax_lowest(candidates.transpose() * draw);
}

void ts_update(ThompsonState& s, const Eigen::VectorXd& x, double reward) {
  if (s.model == TsModel::kLinear) {
    linucb_update(s.linear, x, reward);
    s.precision = s.linear.gram;
    s.precision_factor.rankUpdate(x, 1.0);
    return;
  }
  const std::size_t refits_before = s.glm.refits;
  glmucb_update(s.glm, {{x, reward}});
  if (s.glm.refits != refits_before) {
    // Fresh Laplace precision at the new mode.
    const auto hx = history(s.glm);
    const Eigen::VectorXd z = hx * s.glm.weights;
    Eigen::VectorXd curv(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double p = logistic(z[i]);
      curv[i] = p * (1.0 - p);
    }
    const auto d = static_cast<Eigen::Index>(s.glm.dim());
    s.precision = s.glm.lambda * Eigen::MatrixXd::Identity(d, d);
    s.precision.noalias() += hx.transpose() * curv.asDiagonal() * hx;
    s.precision_factor.compute(s.precision);
  } else {
    const double p = logistic(x.dot(s.glm.weights));
    const double c = p * (1.0 - p);
    s.precision.noalias() += c * x * x.transpose();
    s.precision_factor.rankUpdate(std::sqrt(c) * x, 1.0);
  }
  if (s.precision_factor.info() != Eigen::Success) throw std::logic_error("Thompson precision is not positive definite");
}

}  // namespace pgcr
