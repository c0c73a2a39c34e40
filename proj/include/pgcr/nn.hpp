#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pgcr/types.hpp"

// Small dense networks with hand-written backpropagation. Hidden layers use
// ReLU, the output layer is linear. Everything is double precision.
namespace pgcr::nn {

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct NetParams {
  std::vector<Layer> layers;

  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;
  bool same_shape(const NetParams& other) const;
  bool all_finite() const;
};

// Gradients share the parameter layout.
using ParamGrads = NetParams;

NetParams zeros_like(const NetParams& params);
// y += a * x
void axpy(double a, const NetParams& x, NetParams& y);
void scale(NetParams& params, double factor);
Eigen::VectorXd flatten(const NetParams& params);
NetParams unflatten(const Eigen::VectorXd& flat, const NetParams& shape);

// Dropout on the input of `layer` (layer 0 masks the network input, the last
// layer index masks the final hidden activation). Kept units are scaled by
// 1/(1-rate). `mask` is binary; it has one column shared by every sample or
// one column per sample in a batch.
struct DropoutSpec {
  std::size_t layer = 0;
  double rate = 0.0;
  std::optional<Eigen::MatrixXd> mask;
};

Eigen::VectorXd sample_dropout_mask(std::size_t width, double rate, Rng& rng);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;       // input to each layer, after ReLU/dropout
  std::vector<Eigen::MatrixXd> preactivations;
  std::optional<std::size_t> dropout_layer;
  Eigen::MatrixXd dropout_scale;             // mask / (1 - rate)
};

struct ForwardResult {
  Eigen::VectorXd output;
  ForwardCache cache;
};

struct BatchForwardResult {
  Eigen::MatrixXd output;  // out x batch
  ForwardCache cache;
};

NetParams mlp_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

// A missing mask in `dropout` is sampled from `rng` (one mask for the whole
// batch). Throws std::invalid_argument on dimension mismatch.
ForwardResult mlp_forward(const NetParams& params, const Eigen::VectorXd& x,
                          const DropoutSpec* dropout, Rng& rng);
BatchForwardResult mlp_forward_batch(const NetParams& params, const Eigen::MatrixXd& x,
                                     const DropoutSpec* dropout, Rng& rng);
// Deterministic variants: dropout must carry its mask (or be null).
ForwardResult mlp_forward(const NetParams& params, const Eigen::VectorXd& x,
                          const DropoutSpec* dropout = nullptr);
BatchForwardResult mlp_forward_batch(const NetParams& params, const Eigen::MatrixXd& x,
                                     const DropoutSpec* dropout = nullptr);

// First output of every column evaluated one column at a time, so a column's
// value does not depend on its position in the batch (blocked matrix products
// round differently at different offsets). `dropout` must carry a single
// shared mask column or be null.
Eigen::VectorXd mlp_score_columns(const NetParams& params, const Eigen::MatrixXd& x,
                                  const DropoutSpec* dropout = nullptr);

// Gradient of sum_k upstream(:,k) . output(:,k) with respect to every weight
// and bias.
ParamGrads mlp_backward(const NetParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream);
ParamGrads mlp_backward(const NetParams& params, const ForwardCache& cache,
                        const Eigen::VectorXd& upstream);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptState {
  ParamGrads first_moment;
  ParamGrads second_moment;
  std::int64_t step = 0;
  AdamHyper hyper;
};

OptState adam_init(const NetParams& params, const AdamHyper& hyper = {});

// One Adam descent step on a loss whose gradient is `grads`. Throws
// NumericFault (leaving params and state untouched) if grads hold NaN/Inf.
void adam_step(NetParams& params, const ParamGrads& grads, OptState& state);

// Central differences, one coordinate at a time.
ParamGrads finite_diff_grad(const std::function<double(const NetParams&)>& eval,
                            const NetParams& params, double h);

}  // namespace pgcr::nn
