#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pgcr/replay.hpp"
#include "pgcr/types.hpp"

namespace pgcr {

// Interaction protocol shared by every algorithm: observe candidates, choose,
// then receive the reward of that choice.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::size_t choose(const std::shared_ptr<const Observation>& obs, Rng& rng) = 0;
  // `episode_end` marks the last step of an episode; the next observation
  // does not follow from this choice.
  virtual void learn(double reward, bool episode_end, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

struct ReplaySchedule {
  double gamma = 0.0;
  std::size_t batch_size = 64;
  std::size_t warmup = 100;
  std::size_t update_every = 1;
  std::size_t capacity = 100000;
  double bucket_precision = 0.1;
};

// Agents trained from experience replay. Completes Sarsa tuples (the next
// action is known only at the following choose) and runs `train` on a
// sampled batch every `update_every` steps once `warmup` steps have passed.
class ReplayAgent : public Agent {
 public:
  explicit ReplayAgent(const ReplaySchedule& schedule);

  std::size_t choose(const std::shared_ptr<const Observation>& obs, Rng& rng) final;
  void learn(double reward, bool episode_end, Rng& rng) final;

  const ReplayBuffer& buffer() const { return buffer_; }
  ReplayBuffer& mutable_buffer() { return buffer_; }
  const ReplaySchedule& schedule() const { return schedule_; }
  // Number of decisions made so far.
  std::int64_t steps() const { return steps_; }
  std::int64_t updates() const { return updates_; }

 protected:
  virtual std::size_t decide(const Observation& obs, Rng& rng) = 0;
  virtual void train(const std::vector<Transition>& batch, Rng& rng) = 0;

 private:
  ReplaySchedule schedule_;
  ReplayBuffer buffer_;
  std::optional<Transition> pending_;
  bool awaiting_next_ = false;
  std::int64_t steps_ = 0;
  std::int64_t updates_ = 0;
};

}  // namespace pgcr
