#include "pgcr/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pgcr::nn {

std::size_t NetParams::input_size() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t NetParams::output_size() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

std::size_t NetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool NetParams::same_shape(const NetParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].weight.rows() != other.layers[k].weight.rows() ||
        layers[k].weight.cols() != other.layers[k].weight.cols() ||
        layers[k].bias.size() != other.layers[k].bias.size())
      return false;
  }
  return true;
}

bool NetParams::all_finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

NetParams zeros_like(const NetParams& params) {
  NetParams z;
  z.layers.reserve(params.layers.size());
  for (const auto& l : params.layers)
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  return z;
}

void axpy(double a, const NetParams& x, NetParams& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("axpy: shape mismatch");
  for (std::size_t k = 0; k < x.layers.size(); ++k) {
    y.layers[k].weight.noalias() += a * x.layers[k].weight;
    y.layers[k].bias.noalias() += a * x.layers[k].bias;
  }
}

void scale(NetParams& params, double factor) {
  for (auto& l : params.layers) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

Eigen::VectorXd flatten(const NetParams& params) {
  Eigen::VectorXd flat(params.parameter_count());
  Eigen::Index pos = 0;
  for (const auto& l : params.layers) {
    flat.segment(pos, l.weight.size()) = l.weight.reshaped();
    pos += l.weight.size();
    flat.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return flat;
}

NetParams unflatten(const Eigen::VectorXd& flat, const NetParams& shape) {
  if (static_cast<std::size_t>(flat.size()) != shape.parameter_count())
    throw std::invalid_argument("unflatten: size mismatch");
  NetParams out = zeros_like(shape);
  Eigen::Index pos = 0;
  for (auto& l : out.layers) {
    l.weight.reshaped() = flat.segment(pos, l.weight.size());
    pos += l.weight.size();
    l.bias = flat.segment(pos, l.bias.size());
    pos += l.bias.size();
  }
  return out;
}

Eigen::VectorXd sample_dropout_mask(std::size_t width, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0,1)");
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(width));
  if (rate == 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? 1.0 : 0.0;
  return mask;
}

NetParams mlp_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("mlp_init: need at least 2 layer sizes");
  for (auto s : layer_sizes)
    if (s == 0) throw std::invalid_argument("mlp_init: layer sizes must be positive");
  Rng rng = make_rng(seed, 0x6d6c70);
  NetParams p;
  const std::size_t n_layers = layer_sizes.size() - 1;
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto in = static_cast<Eigen::Index>(layer_sizes[k]);
    const auto out = static_cast<Eigen::Index>(layer_sizes[k + 1]);
    // He for layers feeding a ReLU, LeCun for the linear output.
    const double var = (k + 1 < n_layers ? 2.0 : 1.0) / static_cast<double>(in);
    std::normal_distribution<double> dist(0.0, std::sqrt(var));
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index j = 0; j < in; ++j)
      for (Eigen::Index i = 0; i < out; ++i) layer.weight(i, j) = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace {

void check_dropout(const NetParams& params, const DropoutSpec& d, Eigen::Index batch) {
  if (d.layer >= params.layers.size())
    throw std::invalid_argument("dropout layer index out of range");
  if (!(d.rate >= 0.0 && d.rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0,1)");
  if (d.mask) {
    const auto width = params.layers[d.layer].weight.cols();
    if (d.mask->rows() != width || (d.mask->cols() != 1 && d.mask->cols() != batch))
      throw std::invalid_argument("dropout mask has the wrong shape");
  }
}

BatchForwardResult forward_impl(const NetParams& params, const Eigen::MatrixXd& x,
                                const DropoutSpec* dropout) {
  if (params.layers.empty()) throw std::invalid_argument("mlp_forward: empty network");
  if (static_cast<std::size_t>(x.rows()) != params.input_size())
    throw std::invalid_argument("mlp_forward: input has " + std::to_string(x.rows()) +
                                " rows, network expects " + std::to_string(params.input_size()));
  BatchForwardResult res;
  auto& cache = res.cache;
  const std::size_t n = params.layers.size();
  cache.inputs.reserve(n);
  cache.preactivations.reserve(n);
  if (dropout) {
    check_dropout(params, *dropout, x.cols());
    cache.dropout_layer = dropout->layer;
    cache.dropout_scale = *dropout->mask * (1.0 / (1.0 - dropout->rate));
  }

  Eigen::MatrixXd a = x;
  for (std::size_t k = 0; k < n; ++k) {
    if (cache.dropout_layer && *cache.dropout_layer == k) {
      if (cache.dropout_scale.cols() == 1)
        a = a.array().colwise() * cache.dropout_scale.col(0).array();
      else
        a = a.array() * cache.dropout_scale.array();
    }
    const auto& l = params.layers[k];
    Eigen::MatrixXd z = l.weight * a;
    z.colwise() += l.bias;
    cache.inputs.push_back(std::move(a));
    if (k + 1 < n) {
      a = z.cwiseMax(0.0);
      cache.preactivations.push_back(std::move(z));
    } else {
      res.output = z;
      cache.preactivations.push_back(std::move(z));
    }
  }
  return res;
}

}  // namespace

BatchForwardResult mlp_forward_batch(const NetParams& params, const Eigen::MatrixXd& x,
                                     const DropoutSpec* dropout, Rng& rng) {
  if (dropout && !dropout->mask) {
    check_dropout(params, *dropout, x.cols());
    DropoutSpec with_mask = *dropout;
    with_mask.mask = sample_dropout_mask(
        static_cast<std::size_t>(params.layers[dropout->layer].weight.cols()), dropout->rate, rng);
    return forward_impl(params, x, &with_mask);
  }
  return forward_impl(params, x, dropout);
}

BatchForwardResult mlp_forward_batch(const NetParams& params, const Eigen::MatrixXd& x,
                                     const DropoutSpec* dropout) {
  if (dropout && !dropout->mask)
    throw std::invalid_argument("mlp_forward: dropout without a mask needs an rng");
  return forward_impl(params, x, dropout);
}

ForwardResult mlp_forward(const NetParams& params, const Eigen::VectorXd& x,
                          const DropoutSpec* dropout, Rng& rng) {
  auto r = mlp_forward_batch(params, Eigen::MatrixXd(x), dropout, rng);
  return {r.output.col(0), std::move(r.cache)};
}

ForwardResult mlp_forward(const NetParams& params, const Eigen::VectorXd& x,
                          const DropoutSpec* dropout) {
  auto r = mlp_forward_batch(params, Eigen::MatrixXd(x), dropout);
  return {r.output.col(0), std::move(r.cache)};
}

ParamGrads mlp_backward(const NetParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream) {
  const std::size_t n = params.layers.size();
  if (cache.inputs.size() != n || cache.preactivations.size() != n)
    throw std::invalid_argument("mlp_backward: cache does not match the network depth");
  const auto batch = cache.inputs.front().cols();
  for (std::size_t k = 0; k < n; ++k) {
    if (cache.inputs[k].rows() != params.layers[k].weight.cols() ||
        cache.preactivations[k].rows() != params.layers[k].weight.rows() ||
        cache.inputs[k].cols() != batch)
      throw std::invalid_argument("mlp_backward: stale or mismatched cache");
  }
  if (upstream.rows() != params.layers.back().weight.rows() || upstream.cols() != batch)
    throw std::invalid_argument("mlp_backward: upstream shape mismatch");

  ParamGrads g;
  g.layers.resize(n);
  Eigen::MatrixXd delta = upstream;
  for (std::size_t k = n; k-- > 0;) {
    g.layers[k].weight.noalias() = delta * cache.inputs[k].transpose();
    g.layers[k].bias = delta.rowwise().sum();
    if (k == 0) break;
    Eigen::MatrixXd back = params.layers[k].weight.transpose() * delta;
    if (cache.dropout_layer && *cache.dropout_layer == k) {
      if (cache.dropout_scale.cols() == 1)
        back = back.array().colwise() * cache.dropout_scale.col(0).array();
      else
        back = back.array() * cache.dropout_scale.array();
    }
    delta = (cache.preactivations[k - 1].array() > 0.0).select(back, 0.0);
  }
  return g;
}

ParamGrads mlp_backward(const NetParams& params, const ForwardCache& cache,
                        const Eigen::VectorXd& upstream) {
  return mlp_backward(params, cache, Eigen::MatrixXd(upstream));
}

OptState adam_init(const NetParams& params, const AdamHyper& hyper) {
  return OptState{zeros_like(params), zeros_like(params), 0, hyper};
}

void adam_step(NetParams& params, const ParamGrads& grads, OptState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment))
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!grads.all_finite()) throw NumericFault("adam_step: non-finite gradient");

  const auto& h = state.hyper;
  state.step += 1;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseAbs2();
    p.array() -= h.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + h.epsilon);
  };
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    update(params.layers[k].weight, grads.layers[k].weight, state.first_moment.layers[k].weight,
           state.second_moment.layers[k].weight);
    update(params.layers[k].bias, grads.layers[k].bias, state.first_moment.layers[k].bias,
           state.second_moment.layers[k].bias);
  }
}

ParamGrads finite_diff_grad(const std::function<double(const NetParams&)>& eval,
                            const NetParams& params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
  const Eigen::VectorXd base = flatten(params);
  Eigen::VectorXd grad(base.size());
  Eigen::VectorXd probe = base;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    probe[i] = base[i] + h;
    const double up = eval(unflatten(probe, params));
    probe[i] = base[i] - h;
    const double down = eval(unflatten(probe, params));
    probe[i] = base[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return unflatten(grad, params);
}

Eigen::VectorXd mlp_score_columns(const NetParams& params, const Eigen::MatrixXd& x,
                                  const DropoutSpec* dropout) {
  if (dropout && dropout->mask && dropout->mask->cols() != 1)
    throw std::invalid_argument("mlp_score_columns: dropout needs one shared mask column");
  Eigen::VectorXd out(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) out[j] = mlp_forward(params, Eigen::VectorXd(x.col(j)), dropout).output[0];
  return out;
}

}  // namespace pgcr::nn
