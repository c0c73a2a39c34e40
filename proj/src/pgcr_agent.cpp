#include "pgcr/pgcr_agent.hpp"

#include <cmath>
#include <stdexcept>

namespace pgcr {

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

}  // namespace

PgcrAgent::PgcrAgent(std::size_t state_dim, std::size_t context_dim, AgentHyper hyper,
                     std::uint64_t seed)
    : ReplayAgent(hyper.replay),
      hyper_(std::move(hyper)),
      state_dim_(state_dim),
      context_dim_(context_dim) {
  if (hyper_.candidates == 0) throw std::invalid_argument("pgcr: need at least one candidate");
  if (hyper_.resamples == 0) throw std::invalid_argument("pgcr: resample count must be at least 1");
  if (!(hyper_.greed_rate >= 0.0)) throw std::invalid_argument("pgcr: greed rate must be >= 0");
  if (!(hyper_.greed_cap > 0.0)) throw std::invalid_argument("pgcr: greed cap must be positive");
  if (!(hyper_.dropout >= 0.0 && hyper_.dropout < 1.0))
    throw std::invalid_argument("pgcr: dropout rate must be in [0,1)");
  if (hyper_.hidden.empty()) throw std::invalid_argument("pgcr: need at least one hidden layer");
  const auto sizes = layer_sizes(state_dim + context_dim, hyper_.hidden);
  actor_ = nn::mlp_init(sizes, seed);
  critic_ = nn::mlp_init(sizes, seed + 1);
  // Zero output layer: the untrained policy is uniform.
  actor_.layers.back().weight.setZero();
  actor_opt_ = nn::adam_init(actor_, {hyper_.actor_lr});
  critic_opt_ = nn::adam_init(critic_, {hyper_.critic_lr});
}

double PgcrAgent::greed() const {
  return greed_exponent(steps(), hyper_.greed_rate, hyper_.greed_cap);
}

ScoreModel PgcrAgent::score_model() const { return ScoreModel{&actor_, greed(), hyper_.dropout}; }

std::optional<Eigen::VectorXd> PgcrAgent::sample_mask(Rng& rng) const {
  if (hyper_.dropout == 0.0) return std::nullopt;
  return nn::sample_dropout_mask(score_model().dropout_width(), hyper_.dropout, rng);
}

ScoreResult PgcrAgent::score(const Eigen::VectorXd& state, const Eigen::VectorXd& context,
                             const std::optional<Eigen::VectorXd>& mask) const {
  if (static_cast<std::size_t>(state.size()) != state_dim_ ||
      static_cast<std::size_t>(context.size()) != context_dim_)
    throw std::invalid_argument("score: state/context dimension mismatch");
  std::optional<nn::DropoutSpec> dropout;
  if (mask) dropout = nn::DropoutSpec{actor_.layers.size() - 1, hyper_.dropout, Eigen::MatrixXd(*mask)};
  auto fwd = nn::mlp_forward(actor_, augment(state, context), dropout ? &*dropout : nullptr);
  const double raw = fwd.output[0];
  return {positive_score(raw, greed()), raw, std::move(fwd.cache)};
}

Eigen::VectorXd PgcrAgent::policy_probs(const Eigen::VectorXd& state, const CandidateSet& candidates,
                                        const std::optional<Eigen::VectorXd>& mask) const {
  if (candidates.cols() == 0) throw std::invalid_argument("policy_probs: empty candidate set");
  if (static_cast<std::size_t>(state.size()) != state_dim_ ||
      static_cast<std::size_t>(candidates.rows()) != context_dim_)
    throw std::invalid_argument("policy_probs: state/context dimension mismatch");
  return softmax(log_scores(score_model(), state, candidates, mask));
}

MarginalSample PgcrAgent::make_sample(const Eigen::VectorXd& state, const Eigen::VectorXd& target,
                                      const std::optional<Eigen::VectorXd>& mask, Rng& rng,
                                      const CandidateSet* fallback) const {
  MarginalSample s{state, target, Eigen::MatrixXd(target.size(), 0), hyper_.resamples, mask};
  const std::size_t others = hyper_.candidates - 1;
  if (others == 0) return s;
  if (buffer().empty()) {
    if (!fallback) throw EmptyBufferError("estimate_marginal: empty buffer and no fallback candidates");
    if (static_cast<std::size_t>(fallback->cols()) != others)
      throw std::invalid_argument("estimate_marginal: fallback must hold the other m-1 candidates");
    s.competitors = *fallback;
    s.resamples = 1;
    return s;
  }
  s.competitors = buffer().sample_contexts(state_bucket(state, buffer().bucket_precision()),
                                        others * hyper_.resamples, rng);
  return s;
}

MarginalEstimate PgcrAgent::estimate_marginal(const Eigen::VectorXd& state,
                                              const Eigen::VectorXd& context,
                                              const std::optional<Eigen::VectorXd>& mask, Rng& rng,
                                              const CandidateSet* fallback) const {
  if (static_cast<std::size_t>(state.size()) != state_dim_ ||
      static_cast<std::size_t>(context.size()) != context_dim_)
    throw std::invalid_argument("estimate_marginal: state/context dimension mismatch");
  MarginalEstimate est;
  est.sample = make_sample(state, context, mask, rng, fallback);
  est.value = marginal_values(score_model(), std::span(&est.sample, 1)).front();
  est.actor_version = actor_version_;
  return est;
}

nn::ParamGrads PgcrAgent::marginal_grad(const MarginalEstimate& est) const {
  if (est.actor_version != actor_version_)
    throw std::invalid_argument("marginal_grad: estimate is stale for the current actor");
  const double one = 1.0;
  return weighted_marginal_gradient(score_model(), std::span(&est.sample, 1), std::span(&one, 1));
}

double PgcrAgent::critic_value(const Eigen::VectorXd& state, const Eigen::VectorXd& context) const {
  return nn::mlp_forward(critic_, augment(state, context)).output[0];
}

Eigen::VectorXd PgcrAgent::critic_values(const Eigen::VectorXd& state,
                                         const CandidateSet& candidates) const {
  return nn::mlp_forward_batch(critic_, augment(state, candidates)).output.row(0).transpose();
}

void PgcrAgent::critic_update(const std::vector<Transition>& batch, Rng& rng) {
  if (batch.empty()) return;
  const auto b = static_cast<Eigen::Index>(batch.size());
  const double gamma = schedule().gamma;
  std::vector<MarginalSample> samples;
  samples.reserve(batch.size());
  const auto in = static_cast<Eigen::Index>(critic_.input_size());
  Eigen::MatrixXd now(in, b);
  std::vector<Eigen::Index> bootstrap;
  Eigen::MatrixXd next(in, b);
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto& t = batch[static_cast<std::size_t>(r)];
    if (gamma > 0.0 && t.next && !t.next_action)
      throw std::invalid_argument("critic_update: record without next action in sequential mode");
    const Eigen::VectorXd chosen = t.chosen_context();
    samples.push_back(make_sample(t.state(), chosen, sample_mask(rng), rng, nullptr));
    now.col(r) = augment(t.state(), chosen);
    if (gamma > 0.0 && t.next) {
      next.col(static_cast<Eigen::Index>(bootstrap.size())) =
          augment(t.next->state, Eigen::VectorXd(t.next->candidates.col(static_cast<Eigen::Index>(*t.next_action))));
      bootstrap.push_back(r);
    }
  }
  const auto p_hat = marginal_values(score_model(), samples);
  const auto fwd = nn::mlp_forward_batch(critic_, now);
  Eigen::VectorXd next_value = Eigen::VectorXd::Zero(b);
  if (!bootstrap.empty()) {
    const auto nb = static_cast<Eigen::Index>(bootstrap.size());
    const Eigen::RowVectorXd f_next = nn::mlp_forward_batch(critic_, next.leftCols(nb)).output.row(0);
    for (Eigen::Index i = 0; i < nb; ++i) next_value[bootstrap[static_cast<std::size_t>(i)]] = f_next[i];
  }
  // Semi-gradient: descend on -(1/B) sum p-hat * delta * f(s, c_a).
  Eigen::MatrixXd upstream(1, b);
  for (Eigen::Index r = 0; r < b; ++r) {
    const double w = critic_step_weight(p_hat[static_cast<std::size_t>(r)], batch[static_cast<std::size_t>(r)].reward,
                                        gamma, next_value[r], fwd.output(0, r));
    upstream(0, r) = -w / static_cast<double>(b);
  }
  nn::adam_step(critic_, nn::mlp_backward(critic_, fwd.cache, upstream), critic_opt_);
}

double critic_step_weight(double p_hat, double reward, double gamma, double next_value, double value) {
  return p_hat * (reward + gamma * next_value - value);
}

ActorBatchPlan PgcrAgent::plan_actor_batch(const std::vector<Transition>& batch, Rng& rng) const {
  ActorBatchPlan plan;
  for (const auto& t : batch) {
    const auto mask = sample_mask(rng);
    const auto m = static_cast<Eigen::Index>(t.candidates().cols());
    for (Eigen::Index i = 0; i < m; ++i)
      plan.samples.push_back(make_sample(t.state(), t.candidates().col(i), mask, rng, nullptr));
    plan.record_sizes.push_back(static_cast<std::size_t>(m));
  }
  return plan;
}

namespace {

std::vector<double> critic_weights(const nn::NetParams& critic, const ActorBatchPlan& plan) {
  if (plan.samples.empty()) return {};
  const auto in = static_cast<Eigen::Index>(critic.input_size());
  Eigen::MatrixXd x(in, static_cast<Eigen::Index>(plan.samples.size()));
  for (std::size_t k = 0; k < plan.samples.size(); ++k)
    x.col(static_cast<Eigen::Index>(k)) = augment(plan.samples[k].state, plan.samples[k].target);
  const Eigen::RowVectorXd f = nn::mlp_forward_batch(critic, x).output.row(0);
  const double inv_b = 1.0 / static_cast<double>(plan.record_sizes.size());
  std::vector<double> w(plan.samples.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = f[static_cast<Eigen::Index>(k)] * inv_b;
  return w;
}

}  // namespace

double PgcrAgent::actor_objective(const nn::NetParams& actor, const ActorBatchPlan& plan) const {
  const auto w = critic_weights(critic_, plan);
  ScoreModel model{&actor, greed(), hyper_.dropout};
  const auto p = marginal_values(model, plan.samples);
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] * w[k];
  return total;
}

nn::ParamGrads PgcrAgent::actor_objective_gradient(const ActorBatchPlan& plan) const {
  const auto w = critic_weights(critic_, plan);
  return weighted_marginal_gradient(score_model(), plan.samples, w);
}

void PgcrAgent::actor_update(const std::vector<Transition>& batch, Rng& rng) {
  if (batch.empty()) return;
  auto grad = actor_objective_gradient(plan_actor_batch(batch, rng));
  nn::scale(grad, -1.0);  // ascent
  nn::adam_step(actor_, grad, actor_opt_);
  ++actor_version_;
}

void PgcrAgent::train(const std::vector<Transition>& batch, Rng& rng) {
  try {
    critic_update(batch, rng);
    actor_update(batch, rng);
  } catch (const NumericFault&) {
    // Skip the batch; parameters are left as they were before the faulty step.
  }
}

std::size_t PgcrAgent::decide(const Observation& obs, Rng& rng) {
  if (obs.size() != hyper_.candidates)
    throw std::invalid_argument("pgcr: expected " + std::to_string(hyper_.candidates) +
                                " candidates, got " + std::to_string(obs.size()));
  const auto mask = sample_mask(rng);
  return select_action(policy_probs(obs.state, obs.candidates, mask), rng);
}

std::optional<double> PgcrAgent::compatibility_cosine(const MarginalEstimate& est) const {
  if (!actor_.same_shape(critic_)) return std::nullopt;
  const auto fwd = nn::mlp_forward(critic_, augment(est.sample.state, est.sample.target));
  const Eigen::VectorXd df = nn::flatten(nn::mlp_backward(critic_, fwd.cache, Eigen::VectorXd(Eigen::VectorXd::Ones(1))));
  const Eigen::VectorXd dlogp = nn::flatten(marginal_grad(est)) / est.value;
  const double denom = df.norm() * dlogp.norm();
  if (denom == 0.0) return std::nullopt;
  return df.dot(dlogp) / denom;
}

void PgcrAgent::set_actor(nn::NetParams actor) {
  if (!actor.same_shape(actor_)) throw std::invalid_argument("set_actor: shape mismatch");
  actor_ = std::move(actor);
  ++actor_version_;
}

void PgcrAgent::set_critic(nn::NetParams critic) {
  if (!critic.same_shape(critic_)) throw std::invalid_argument("set_critic: shape mismatch");
  critic_ = std::move(critic);
}

}  // namespace pgcr
