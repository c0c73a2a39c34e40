#include "pgcr/baselines.hpp"

#include <stdexcept>

namespace pgcr {

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden) {
  if (hidden.empty()) throw std::invalid_argument("need at least one hidden layer");
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

Eigen::VectorXd net_values(const nn::NetParams& net, const Eigen::VectorXd& state,
                           const CandidateSet& candidates) {
  if (static_cast<std::size_t>(state.size() + candidates.rows()) != net.input_size())
    throw std::invalid_argument("state/context dimension does not match the network");
  return nn::mlp_score_columns(net, augment(state, candidates));
}

}  // namespace

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& inputs) {
  Eigen::MatrixXd out(inputs.rows() + 1, inputs.cols());
  out.topRows(inputs.rows()) = inputs;
  out.bottomRows(1).setOnes();
  return out;
}

std::size_t egreedy_select(const Eigen::VectorXd& values, double epsilon, Rng& rng) {
  if (values.size() == 0) throw std::invalid_argument("egreedy_select: empty candidate set");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0,1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(values.size()) - 1);
    return pick(rng);
  }
  return argmax_lowest(values);
}

std::size_t egreedy_select(const nn::NetParams& value_net, const Eigen::VectorXd& state,
                           const CandidateSet& candidates, double epsilon, Rng& rng) {
  if (candidates.cols() == 0) throw std::invalid_argument("egreedy_select: empty candidate set");
  return egreedy_select(net_values(value_net, state, candidates), epsilon, rng);
}

void egreedy_update(nn::NetParams& value_net, nn::OptState& opt, const std::vector<Transition>& batch) {
  if (batch.empty()) return;
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(value_net.input_size()), b);
  Eigen::RowVectorXd r(b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const auto& t = batch[static_cast<std::size_t>(k)];
    x.col(k) = augment(t.state(), t.chosen_context());
    r[k] = t.reward;
  }
  const auto fwd = nn::mlp_forward_batch(value_net, x);
  const Eigen::MatrixXd upstream = 2.0 * (fwd.output - r) / static_cast<double>(b);
  nn::adam_step(value_net, nn::mlp_backward(value_net, fwd.cache, upstream), opt);
}

EGreedyAgent::EGreedyAgent(std::size_t state_dim, std::size_t context_dim, EGreedyHyper hyper,
                           std::uint64_t seed)
    : ReplayAgent(hyper.replay), hyper_(std::move(hyper)) {
  if (!(hyper_.epsilon >= 0.0 && hyper_.epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0,1]");
  net_ = nn::mlp_init(layer_sizes(state_dim + context_dim, hyper_.hidden), seed);
  opt_ = nn::adam_init(net_, {hyper_.lr});
}

void EGreedyAgent::set_value_net(nn::NetParams net) {
  if (!net.same_shape(net_)) throw std::invalid_argument("set_value_net: shape mismatch");
  net_ = std::move(net);
}

std::size_t EGreedyAgent::decide(const Observation& obs, Rng& rng) {
  return egreedy_select(net_, obs.state, obs.candidates, hyper_.epsilon, rng);
}

void EGreedyAgent::train(const std::vector<Transition>& batch, Rng&) {
  try {
    egreedy_update(net_, opt_, batch);
  } catch (const NumericFault&) {
  }
}

PgAgent::PgAgent(std::size_t state_dim, std::size_t context_dim, PgHyper hyper, std::uint64_t seed)
    : ReplayAgent(hyper.replay), hyper_(std::move(hyper)), state_dim_(state_dim), context_dim_(context_dim) {
  const auto sizes = layer_sizes(state_dim + context_dim, hyper_.hidden);
  actor_ = nn::mlp_init(sizes, seed);
  critic_ = nn::mlp_init(sizes, seed + 1);
  actor_.layers.back().weight.setZero();
  actor_opt_ = nn::adam_init(actor_, {hyper_.actor_lr});
  critic_opt_ = nn::adam_init(critic_, {hyper_.critic_lr});
}

Eigen::VectorXd PgAgent::probs(const Eigen::VectorXd& state, const CandidateSet& candidates) const {
  if (candidates.cols() == 0) throw std::invalid_argument("pg: empty candidate set");
  if (static_cast<std::size_t>(state.size()) != state_dim_ ||
      static_cast<std::size_t>(candidates.rows()) != context_dim_)
    throw std::invalid_argument("pg: state/context dimension mismatch");
  return softmax_probs(score_model(), SoftmaxSample{state, candidates});
}

Eigen::VectorXd PgAgent::critic_values(const Eigen::VectorXd& state, const CandidateSet& candidates) const {
  return net_values(critic_, state, candidates);
}

void PgAgent::critic_update(const std::vector<Transition>& batch) {
  if (batch.empty()) return;
  const auto b = static_cast<Eigen::Index>(batch.size());
  const double gamma = schedule().gamma;
  const auto in = static_cast<Eigen::Index>(critic_.input_size());
  Eigen::MatrixXd now(in, b);
  Eigen::VectorXd target(b);
  Eigen::VectorXd nu_a(b);
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto& t = batch[static_cast<std::size_t>(r)];
    if (gamma > 0.0 && t.next && !t.next_action)
      throw std::invalid_argument("critic_update: record without next action in sequential mode");
    now.col(r) = augment(t.state(), t.chosen_context());
    nu_a[r] = probs(t.state(), t.candidates())[static_cast<Eigen::Index>(t.action)];
    target[r] = t.reward;
    if (gamma > 0.0 && t.next) {
      const Eigen::VectorXd next_ctx = t.next->candidates.col(static_cast<Eigen::Index>(*t.next_action));
      target[r] += gamma * nn::mlp_forward(critic_, augment(t.next->state, next_ctx)).output[0];
    }
  }
  const auto fwd = nn::mlp_forward_batch(critic_, now);
  Eigen::MatrixXd upstream(1, b);
  for (Eigen::Index r = 0; r < b; ++r)
    upstream(0, r) = -nu_a[r] * (target[r] - fwd.output(0, r)) / static_cast<double>(b);
  nn::adam_step(critic_, nn::mlp_backward(critic_, fwd.cache, upstream), critic_opt_);
}

std::vector<Eigen::VectorXd> PgAgent::critic_weights(const std::vector<Transition>& batch) const {
  std::vector<Eigen::VectorXd> w;
  w.reserve(batch.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch) w.push_back(critic_values(t.state(), t.candidates()) * inv_b);
  return w;
}

double PgAgent::actor_objective(const nn::NetParams& actor, const std::vector<Transition>& batch) const {
  const auto w = critic_weights(batch);
  const ScoreModel model{&actor, 1.0, 0.0};
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k)
    total += w[k].dot(softmax_probs(model, SoftmaxSample{batch[k].state(), batch[k].candidates()}));
  return total;
}

nn::ParamGrads PgAgent::actor_objective_gradient(const std::vector<Transition>& batch) const {
  const auto w = critic_weights(batch);
  std::vector<SoftmaxSample> samples;
  samples.reserve(batch.size());
  for (const auto& t : batch) samples.push_back({t.state(), t.candidates()});
  return weighted_softmax_gradient(score_model(), samples, w);
}

void PgAgent::actor_update(const std::vector<Transition>& batch) {
  if (batch.empty()) return;
  auto grad = actor_objective_gradient(batch);
  nn::scale(grad, -1.0);
  nn::adam_step(actor_, grad, actor_opt_);
}

void PgAgent::set_actor(nn::NetParams actor) {
  if (!actor.same_shape(actor_)) throw std::invalid_argument("set_actor: shape mismatch");
  actor_ = std::move(actor);
}

void PgAgent::set_critic(nn::NetParams critic) {
  if (!critic.same_shape(critic_)) throw std::invalid_argument("set_critic: shape mismatch");
  critic_ = std::move(critic);
}

std::size_t PgAgent::decide(const Observation& obs, Rng& rng) {
  return select_action(probs(obs.state, obs.candidates), rng);
}

void PgAgent::train(const std::vector<Transition>& batch, Rng&) {
  try {
    critic_update(batch);
    actor_update(batch);
  } catch (const NumericFault&) {
  }
}

std::size_t OnlineLinearAgent::choose(const std::shared_ptr<const Observation>& obs, Rng& rng) {
  if (!obs || obs->size() == 0) throw std::invalid_argument("choose: empty candidate set");
  if (pending_) throw InvalidStateError("choose called twice without learn");
  const Eigen::MatrixXd inputs = with_bias(augment(obs->state, obs->candidates));
  const std::size_t action = select(inputs, rng);
  pending_ = inputs.col(static_cast<Eigen::Index>(action));
  ++steps_;
  return action;
}

void OnlineLinearAgent::learn(double reward, bool, Rng&) {
  if (!pending_) throw InvalidStateError("learn called without a pending choice");
  update(*pending_, reward);
  pending_.reset();
}

LinUcbAgent::LinUcbAgent(std::size_t input_dim, double lambda, double alpha)
    : model_(LinearModelState::create(input_dim + 1, lambda, alpha)) {}

std::size_t LinUcbAgent::select(const Eigen::MatrixXd& inputs, Rng&) { return linucb_select(model_, inputs); }

void LinUcbAgent::update(const Eigen::VectorXd& x, double reward) { linucb_update(model_, x, reward); }

GlmUcbAgent::GlmUcbAgent(std::size_t input_dim, double lambda, double kappa, GlmFitOptions fit)
    : model_(GlmModelState::create(input_dim + 1, lambda, kappa)) {
  model_.refit_growth = fit.refit_growth;
}

std::size_t GlmUcbAgent::select(const Eigen::MatrixXd& inputs, Rng&) {
  return glmucb_select(model_, inputs, steps());
}

void GlmUcbAgent::update(const Eigen::VectorXd& x, double reward) { glmucb_update(model_, {{x, reward}}); }

ThompsonAgent::ThompsonAgent(std::size_t input_dim, TsModel model, double lambda, double scale,
                             GlmFitOptions fit)
    : state_(ThompsonState::create(model, input_dim + 1, lambda, scale)) {
  state_.glm.refit_growth = fit.refit_growth;
}

std::size_t ThompsonAgent::select(const Eigen::MatrixXd& inputs, Rng& rng) { return ts_select(state_, inputs, rng); }

void ThompsonAgent::update(const Eigen::VectorXd& x, double reward) { ts_update(state_, x, reward); }

}  // namespace pgcr
