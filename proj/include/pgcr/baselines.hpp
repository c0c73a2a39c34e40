#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgcr/agent.hpp"
#include "pgcr/linear_models.hpp"
#include "pgcr/nn.hpp"
#include "pgcr/policy.hpp"

// Comparison algorithms behind the common Agent interface. The linear models
// act on the augmented input [state; context].
namespace pgcr {

// ---- epsilon-greedy over a neural value network ----

std::size_t egreedy_select(const Eigen::VectorXd& values, double epsilon, Rng& rng);
std::size_t egreedy_select(const nn::NetParams& value_net, const Eigen::VectorXd& state,
                           const CandidateSet& candidates, double epsilon, Rng& rng);
// One Adam step on the mean squared error of reward against f(s, c_chosen).
void egreedy_update(nn::NetParams& value_net, nn::OptState& opt, const std::vector<Transition>& batch);

struct EGreedyHyper {
  double epsilon = 0.1;
  double lr = 1e-3;
  std::vector<std::size_t> hidden = {10};
  ReplaySchedule replay;
};

class EGreedyAgent : public ReplayAgent {
 public:
  EGreedyAgent(std::size_t state_dim, std::size_t context_dim, EGreedyHyper hyper, std::uint64_t seed);

  std::string name() const override { return "egreedy"; }
  const nn::NetParams& value_net() const { return net_; }
  void set_value_net(nn::NetParams net);

 protected:
  std::size_t decide(const Observation& obs, Rng& rng) override;
  void train(const std::vector<Transition>& batch, Rng& rng) override;

 private:
  EGreedyHyper hyper_;
  nn::NetParams net_;
  nn::OptState opt_;
};

// ---- vanilla policy gradient: softmax over the step's own candidates ----

struct PgHyper {
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  std::vector<std::size_t> hidden = {10};
  ReplaySchedule replay;
};

class PgAgent : public ReplayAgent {
 public:
  PgAgent(std::size_t state_dim, std::size_t context_dim, PgHyper hyper, std::uint64_t seed);

  std::string name() const override { return "pg"; }

  ScoreModel score_model() const { return ScoreModel{&actor_, 1.0, 0.0}; }
  Eigen::VectorXd probs(const Eigen::VectorXd& state, const CandidateSet& candidates) const;
  Eigen::VectorXd critic_values(const Eigen::VectorXd& state, const CandidateSet& candidates) const;

  // Semi-gradient Sarsa weighted by nu of the chosen candidate.
  void critic_update(const std::vector<Transition>& batch);
  // Ascends (1/B) sum_records sum_i nu_i f(s, c_i).
  void actor_update(const std::vector<Transition>& batch);

  double actor_objective(const nn::NetParams& actor, const std::vector<Transition>& batch) const;
  nn::ParamGrads actor_objective_gradient(const std::vector<Transition>& batch) const;

  const nn::NetParams& actor() const { return actor_; }
  const nn::NetParams& critic() const { return critic_; }
  void set_actor(nn::NetParams actor);
  void set_critic(nn::NetParams critic);

 protected:
  std::size_t decide(const Observation& obs, Rng& rng) override;
  void train(const std::vector<Transition>& batch, Rng& rng) override;

 private:
  std::vector<Eigen::VectorXd> critic_weights(const std::vector<Transition>& batch) const;

  PgHyper hyper_;
  std::size_t state_dim_;
  std::size_t context_dim_;
  nn::NetParams actor_;
  nn::NetParams critic_;
  nn::OptState actor_opt_;
  nn::OptState critic_opt_;
};

// ---- linear-model agents (online, one update per step) ----

// Shared bookkeeping: remembers the augmented input of the last choice.
// Appends a constant 1 row so the online linear models fit an intercept.
Eigen::MatrixXd with_bias(const Eigen::MatrixXd& inputs);

// Online linear agents take input_dim = state + context size; the model
// carries one extra intercept coordinate.
class OnlineLinearAgent : public Agent {
 public:
  std::size_t choose(const std::shared_ptr<const Observation>& obs, Rng& rng) final;
  void learn(double reward, bool episode_end, Rng& rng) final;
  std::int64_t steps() const { return steps_; }

 protected:
  virtual std::size_t select(const Eigen::MatrixXd& inputs, Rng& rng) = 0;
  virtual void update(const Eigen::VectorXd& x, double reward) = 0;

 private:
  std::optional<Eigen::VectorXd> pending_;
  std::int64_t steps_ = 0;
};

class LinUcbAgent : public OnlineLinearAgent {
 public:
  LinUcbAgent(std::size_t input_dim, double lambda, double alpha);
  std::string name() const override { return "linucb"; }
  const LinearModelState& model() const { return model_; }

 protected:
  std::size_t select(const Eigen::MatrixXd& inputs, Rng& rng) override;
  void update(const Eigen::VectorXd& x, double reward) override;

 private:
  LinearModelState model_;
};

struct GlmFitOptions {
  double refit_growth = 0.05;
};

class GlmUcbAgent : public OnlineLinearAgent {
 public:
  GlmUcbAgent(std::size_t input_dim, double lambda, double kappa, GlmFitOptions fit = {});
  std::string name() const override { return "glmucb"; }
  const GlmModelState& model() const { return model_; }

 protected:
  std::size_t select(const Eigen::MatrixXd& inputs, Rng& rng) override;
  void update(const Eigen::VectorXd& x, double reward) override;

 private:
  GlmModelState model_;
};

class ThompsonAgent : public OnlineLinearAgent {
 public:
  ThompsonAgent(std::size_t input_dim, TsModel model, double lambda, double scale, GlmFitOptions fit = {});
  std::string name() const override { return "ts"; }
  const ThompsonState& model() const { return state_; }

 protected:
  std::size_t select(const Eigen::MatrixXd& inputs, Rng& rng) override;
  void update(const Eigen::VectorXd& x, double reward) override;

 private:
  ThompsonState state_;
};

}  // namespace pgcr
