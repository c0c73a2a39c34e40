#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pgcr/agent.hpp"
#include "pgcr/nn.hpp"
#include "pgcr/policy.hpp"

namespace pgcr {

struct AgentHyper {
  std::size_t candidates = 5;  // m
  std::size_t resamples = 1;   // N
  double greed_rate = 1e-4;
  double greed_cap = 10.0;
  double dropout = 0.5;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  std::vector<std::size_t> hidden = {10};
  ReplaySchedule replay;
};

// Weight of grad f(s, c_a) in one semi-gradient Sarsa step:
// p_hat * (reward + gamma * next_value - value). Pass next_value 0 at episode end.
double critic_step_weight(double p_hat, double reward, double gamma, double next_value, double value);

// Resample-based estimate of the marginal probability that `sample.target`
// is chosen. Bound to the actor parameters it was computed with.
struct MarginalEstimate {
  double value = 0.0;
  MarginalSample sample;
  std::uint64_t actor_version = 0;
};

struct ScoreResult {
  double mu;   // clamped positive score
  double raw;  // network output
  nn::ForwardCache cache;
};

// Frozen randomness of one actor update: for every record and candidate, the
// resampled competitors and the record's dropout mask.
struct ActorBatchPlan {
  std::vector<MarginalSample> samples;    // record-major, one per candidate
  std::vector<std::size_t> record_sizes;  // candidates per record
};

// Actor-critic agent over the Multinoulli policy with positive scores
// mu(s, c) = exp(e(t) * f_actor(s, c)), trained with the resampled marginal
// choice probability, Time-Dependent Greed and Actor-Dropout.
class PgcrAgent : public ReplayAgent {
 public:
  PgcrAgent(std::size_t state_dim, std::size_t context_dim, AgentHyper hyper, std::uint64_t seed);

  std::string name() const override { return "pgcr"; }

  double greed() const;
  ScoreModel score_model() const;

  // One mask for a whole decision step; nullopt when dropout is off.
  std::optional<Eigen::VectorXd> sample_mask(Rng& rng) const;

  ScoreResult score(const Eigen::VectorXd& state, const Eigen::VectorXd& context,
                    const std::optional<Eigen::VectorXd>& mask) const;
  Eigen::VectorXd policy_probs(const Eigen::VectorXd& state, const CandidateSet& candidates,
                               const std::optional<Eigen::VectorXd>& mask) const;

  // Resamples N groups of m-1 competitors from the replay buffer (same state
  // bucket, else everything stored). With an empty buffer the `fallback`
  // contexts are used as the single group; without fallback it throws
  // EmptyBufferError.
  MarginalEstimate estimate_marginal(const Eigen::VectorXd& state, const Eigen::VectorXd& context,
                                     const std::optional<Eigen::VectorXd>& mask, Rng& rng,
                                     const CandidateSet* fallback = nullptr) const;
  // Throws std::invalid_argument if the actor changed since `est` was made.
  nn::ParamGrads marginal_grad(const MarginalEstimate& est) const;

  double critic_value(const Eigen::VectorXd& state, const Eigen::VectorXd& context) const;
  Eigen::VectorXd critic_values(const Eigen::VectorXd& state, const CandidateSet& candidates) const;

  void critic_update(const std::vector<Transition>& batch, Rng& rng);
  void actor_update(const std::vector<Transition>& batch, Rng& rng);

  ActorBatchPlan plan_actor_batch(const std::vector<Transition>& batch, Rng& rng) const;
  // (1/B) sum_records sum_i p-hat(s, c_i) f(s, c_i) under `actor` with the
  // plan's randomness and the current critic held fixed.
  double actor_objective(const nn::NetParams& actor, const ActorBatchPlan& plan) const;
  // Ascent direction of actor_objective at the current actor.
  nn::ParamGrads actor_objective_gradient(const ActorBatchPlan& plan) const;

  // Cosine between grad_phi f(s,c) and grad_theta log p-hat(s,c); the two
  // networks must share a shape. Diagnostic only.
  std::optional<double> compatibility_cosine(const MarginalEstimate& est) const;

  const nn::NetParams& actor() const { return actor_; }
  const nn::NetParams& critic() const { return critic_; }
  void set_actor(nn::NetParams actor);
  void set_critic(nn::NetParams critic);
  const AgentHyper& hyper() const { return hyper_; }
  std::uint64_t actor_version() const { return actor_version_; }

 protected:
  std::size_t decide(const Observation& obs, Rng& rng) override;
  void train(const std::vector<Transition>& batch, Rng& rng) override;

 private:
  MarginalSample make_sample(const Eigen::VectorXd& state, const Eigen::VectorXd& target,
                             const std::optional<Eigen::VectorXd>& mask, Rng& rng,
                             const CandidateSet* fallback) const;

  AgentHyper hyper_;
  std::size_t state_dim_;
  std::size_t context_dim_;
  nn::NetParams actor_;
  nn::NetParams critic_;
  nn::OptState actor_opt_;
  nn::OptState critic_opt_;
  std::uint64_t actor_version_ = 0;
};

}  // namespace pgcr
