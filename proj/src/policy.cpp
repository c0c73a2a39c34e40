#include "pgcr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pgcr {

double greed_exponent(std::int64_t t, double rate, double cap) {
  return std::min(1.0 + rate * static_cast<double>(t), cap);
}

double positive_score(double raw, double exponent) {
  return std::exp(std::clamp(exponent * raw, -kScoreClamp, kScoreClamp));
}

Eigen::VectorXd normalize_scores(const Eigen::VectorXd& mu) {
  if (mu.size() == 0) throw std::invalid_argument("normalize_scores: empty candidate set");
  if ((mu.array() <= 0.0).any() || !mu.allFinite())
    throw std::invalid_argument("normalize_scores: scores must be positive and finite");
  return mu / mu.sum();
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  if (z.size() == 0) throw std::invalid_argument("softmax: empty input");
  // Scalar exp and a sorted sum: Eigen's vectorized exp rounds differently in
  // packet and tail lanes, which would make the result depend on candidate order.
  const double zmax = z.maxCoeff();
  Eigen::VectorXd e(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) e[i] = std::exp(z[i] - zmax);
  std::vector<double> sorted(e.data(), e.data() + e.size());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  return e / total;
}

std::size_t select_action(const Eigen::VectorXd& probs, Rng& rng) {
  if (probs.size() == 0) throw std::invalid_argument("select_action: empty distribution");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng) * probs.sum();
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0 && x < probs[i]) return static_cast<std::size_t>(i);
    x -= probs[i];
  }
  // Rounding can leave x marginally above the last cumulative sum.
  for (Eigen::Index i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<std::size_t>(i);
  return 0;
}

std::size_t argmax_lowest(const Eigen::VectorXd& values) {
  if (values.size() == 0) throw std::invalid_argument("argmax over an empty set");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return static_cast<std::size_t>(best);
}

std::size_t ScoreModel::dropout_width() const {
  return static_cast<std::size_t>(actor->layers.back().weight.cols());
}

namespace {

// Builds the dropout spec for a batch where column j uses mask masks[j]
// (null = keep everything).
std::optional<nn::DropoutSpec> column_dropout(const ScoreModel& model,
                                              const std::vector<const Eigen::VectorXd*>& masks) {
  const bool any = std::any_of(masks.begin(), masks.end(), [](auto* m) { return m != nullptr; });
  if (!any) return std::nullopt;
  const auto width = static_cast<Eigen::Index>(model.dropout_width());
  Eigen::MatrixXd all(width, static_cast<Eigen::Index>(masks.size()));
  for (std::size_t j = 0; j < masks.size(); ++j) {
    if (masks[j]) {
      if (masks[j]->size() != width) throw std::invalid_argument("dropout mask has the wrong width");
      all.col(static_cast<Eigen::Index>(j)) = *masks[j];
    } else {
      all.col(static_cast<Eigen::Index>(j)).setOnes();
    }
  }
  return nn::DropoutSpec{model.actor->layers.size() - 1, model.dropout_rate, std::move(all)};
}

struct MarginalBatch {
  Eigen::MatrixXd inputs;
  std::vector<const Eigen::VectorXd*> masks;
  std::vector<Eigen::Index> offsets;  // first column of each sample
};

MarginalBatch build_marginal_batch(const ScoreModel& model, std::span<const MarginalSample> samples) {
  MarginalBatch b;
  Eigen::Index cols = 0;
  b.offsets.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.resamples == 0) throw std::invalid_argument("marginal sample needs at least one resample");
    if (s.competitors.cols() % static_cast<Eigen::Index>(s.resamples) != 0)
      throw std::invalid_argument("competitor count is not a multiple of the resample count");
    b.offsets.push_back(cols);
    cols += 1 + s.competitors.cols();
  }
  const auto in = static_cast<Eigen::Index>(model.actor->input_size());
  b.inputs.resize(in, cols);
  b.masks.reserve(static_cast<std::size_t>(cols));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const Eigen::Index sd = s.state.size();
    if (sd + s.target.size() != in || (s.competitors.cols() > 0 && s.competitors.rows() != s.target.size()))
      throw std::invalid_argument("marginal sample does not match the actor input size");
    const Eigen::Index c0 = b.offsets[k];
    const Eigen::Index n = 1 + s.competitors.cols();
    if (sd > 0) b.inputs.block(0, c0, sd, n) = s.state.replicate(1, n);
    b.inputs.block(sd, c0, s.target.size(), 1) = s.target;
    if (s.competitors.cols() > 0) b.inputs.block(sd, c0 + 1, s.target.size(), s.competitors.cols()) = s.competitors;
    const Eigen::VectorXd* m = s.mask ? &*s.mask : nullptr;
    for (Eigen::Index j = 0; j < n; ++j) b.masks.push_back(m);
  }
  return b;
}

}  // namespace

std::size_t MarginalSample::group_size() const {
  return static_cast<std::size_t>(competitors.cols()) / resamples;
}

std::vector<double> marginal_values(const ScoreModel& model, std::span<const MarginalSample> samples) {
  std::vector<double> values;
  weighted_marginal_gradient(model, samples, {}, &values);
  return values;
}

nn::ParamGrads weighted_marginal_gradient(const ScoreModel& model,
                                          std::span<const MarginalSample> samples,
                                          std::span<const double> weights,
                                          std::vector<double>* values) {
  const bool want_grad = !weights.empty();
  if (want_grad && weights.size() != samples.size())
    throw std::invalid_argument("one weight per marginal sample is required");
  if (values) values->assign(samples.size(), 0.0);
  if (samples.empty()) return nn::zeros_like(*model.actor);

  const MarginalBatch b = build_marginal_batch(model, samples);
  const auto dropout = column_dropout(model, b.masks);
  const auto fwd = nn::mlp_forward_batch(*model.actor, b.inputs, dropout ? &*dropout : nullptr);
  const Eigen::RowVectorXd z = model.exponent * fwd.output.row(0);

  Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(1, z.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const Eigen::Index c0 = b.offsets[k];
    const auto g = static_cast<Eigen::Index>(s.group_size());
    const double inv_n = 1.0 / static_cast<double>(s.resamples);
    const double w = want_grad ? weights[k] : 0.0;
    double p_hat = 0.0;
    for (std::size_t n = 0; n < s.resamples; ++n) {
      const Eigen::Index first = c0 + 1 + static_cast<Eigen::Index>(n) * g;
      double zmax = z[c0];
      for (Eigen::Index j = 0; j < g; ++j) zmax = std::max(zmax, z[first + j]);
      const double e_target = std::exp(z[c0] - zmax);
      double den = e_target;
      for (Eigen::Index j = 0; j < g; ++j) den += std::exp(z[first + j] - zmax);
      const double q = e_target / den;
      p_hat += inv_n * q;
      if (want_grad && w != 0.0) {
        const double coef = w * inv_n * model.exponent;
        upstream(0, c0) += coef * q * (1.0 - q);
        for (Eigen::Index j = 0; j < g; ++j) {
          const double share = std::exp(z[first + j] - zmax) / den;
          upstream(0, first + j) -= coef * q * share;
        }
      }
    }
    if (values) (*values)[k] = p_hat;
  }
  if (!want_grad) return nn::zeros_like(*model.actor);
  return nn::mlp_backward(*model.actor, fwd.cache, upstream);
}

Eigen::VectorXd log_scores(const ScoreModel& model, const Eigen::VectorXd& state,
                           const CandidateSet& candidates,
                           const std::optional<Eigen::VectorXd>& mask) {
  if (candidates.cols() == 0) throw std::invalid_argument("empty candidate set");
  std::optional<nn::DropoutSpec> dropout;
  if (mask) dropout = nn::DropoutSpec{model.actor->layers.size() - 1, model.dropout_rate, Eigen::MatrixXd(*mask)};
  return model.exponent * nn::mlp_score_columns(*model.actor, augment(state, candidates), dropout ? &*dropout : nullptr);
}

Eigen::VectorXd softmax_probs(const ScoreModel& model, const SoftmaxSample& sample) {
  return softmax(log_scores(model, sample.state, sample.candidates, std::nullopt));
}

nn::ParamGrads weighted_softmax_gradient(const ScoreModel& model,
                                         std::span<const SoftmaxSample> samples,
                                         std::span<const Eigen::VectorXd> weights) {
  if (weights.size() != samples.size())
    throw std::invalid_argument("one weight vector per softmax sample is required");
  if (samples.empty()) return nn::zeros_like(*model.actor);
  Eigen::Index cols = 0;
  for (const auto& s : samples) cols += s.candidates.cols();
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(model.actor->input_size()), cols);
  Eigen::Index c = 0;
  for (const auto& s : samples) {
    if (s.candidates.cols() == 0) throw std::invalid_argument("empty candidate set");
    inputs.middleCols(c, s.candidates.cols()) = augment(s.state, s.candidates);
    c += s.candidates.cols();
  }
  const auto fwd = nn::mlp_forward_batch(*model.actor, inputs);
  const Eigen::RowVectorXd z = model.exponent * fwd.output.row(0);
  Eigen::MatrixXd upstream(1, cols);
  c = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Eigen::Index m = samples[k].candidates.cols();
    if (weights[k].size() != m) throw std::invalid_argument("softmax weight vector has the wrong length");
    const Eigen::VectorXd nu = softmax(z.segment(c, m).transpose());
    // d/dz_j sum_i w_i nu_i = nu_j (w_j - sum_i w_i nu_i)
    const double mean = weights[k].dot(nu);
    upstream.block(0, c, 1, m) =
        (model.exponent * nu.array() * (weights[k].array() - mean)).transpose();
    c += m;
  }
  return nn::mlp_backward(*model.actor, fwd.cache, upstream);
}

}  // namespace pgcr
