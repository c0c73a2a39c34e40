#include "pgcr/agent.hpp"

#include <stdexcept>

namespace pgcr {

ReplayAgent::ReplayAgent(const ReplaySchedule& schedule)
    : schedule_(schedule), buffer_(schedule.capacity, schedule.bucket_precision) {
  if (!(schedule.gamma >= 0.0 && schedule.gamma < 1.0))
    throw std::invalid_argument("gamma must be in [0,1)");
  if (schedule.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (schedule.update_every == 0) throw std::invalid_argument("update interval must be positive");
}

std::size_t ReplayAgent::choose(const std::shared_ptr<const Observation>& obs, Rng& rng) {
  if (!obs || obs->size() == 0) throw std::invalid_argument("choose: empty candidate set");
  if (pending_ && !awaiting_next_) throw InvalidStateError("choose called twice without learn");
  const std::size_t action = decide(*obs, rng);
  if (pending_) {
    pending_->next = obs;
    pending_->next_action = action;
    buffer_.push(std::move(*pending_));
  }
  pending_ = Transition{obs, action, 0.0, nullptr, std::nullopt, steps_};
  awaiting_next_ = false;
  ++steps_;
  return action;
}

void ReplayAgent::learn(double reward, bool episode_end, Rng& rng) {
  if (!pending_ || awaiting_next_) throw InvalidStateError("learn called without a pending choice");
  pending_->reward = reward;
  if (schedule_.gamma == 0.0 || episode_end) {
    buffer_.push(std::move(*pending_));
    pending_.reset();
  } else {
    awaiting_next_ = true;
  }
  if (steps_ >= static_cast<std::int64_t>(schedule_.warmup) && !buffer_.empty() &&
      steps_ % static_cast<std::int64_t>(schedule_.update_every) == 0) {
    train(buffer_.sample_batch(schedule_.batch_size, rng), rng);
    ++updates_;
  }
}

}  // namespace pgcr
