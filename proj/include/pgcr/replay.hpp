#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pgcr/types.hpp"

namespace pgcr {

// One Sarsa interaction record. Observations are shared between consecutive
// transitions, so `next` of step t is the same object as `current` of t+1.
struct Transition {
  std::shared_ptr<const Observation> current;
  std::size_t action = 0;
  double reward = 0.0;
  std::shared_ptr<const Observation> next;  // null at episode end / in bandit mode
  std::optional<std::size_t> next_action;
  std::int64_t step = 0;

  const Eigen::VectorXd& state() const { return current->state; }
  const CandidateSet& candidates() const { return current->candidates; }
  Eigen::VectorXd chosen_context() const { return current->candidates.col(action); }
};

// Throws std::invalid_argument when the action indices are out of range.
void validate(const Transition& t);

using StateKey = std::uint64_t;

// Coarse quantization of a state vector: every coordinate is rounded to a
// multiple of `precision` and the tuple is hashed. The empty state always
// maps to the same key.
StateKey state_bucket(const Eigen::VectorXd& state, double precision = 0.1);

// Ring buffer of transitions with an index from state bucket to records.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000, double bucket_precision = 0.1);

  void push(Transition t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  double bucket_precision() const { return precision_; }

  // Uniform with replacement. Throws EmptyBufferError.
  std::vector<Transition> sample_batch(std::size_t batch, Rng& rng) const;

  // k contexts drawn uniformly with replacement from every candidate of every
  // stored record in bucket `key`; an empty or unknown bucket, or nullopt
  // (global), draws from all stored candidates. Columns of the result are the
  // contexts. Throws EmptyBufferError / std::invalid_argument (k == 0).
  Eigen::MatrixXd sample_contexts(const std::optional<StateKey>& key, std::size_t k,
                                  Rng& rng) const;

  // Number of live records indexed under `key`.
  std::size_t bucket_size(StateKey key) const;
  std::size_t bucket_count() const { return buckets_.size(); }
  // Record at logical position i, 0 = oldest.
  const Transition& at(std::size_t i) const;

 private:
  struct Slot {
    Transition record;
    StateKey key = 0;
    std::size_t bucket_pos = 0;
  };

  void unindex(std::size_t slot);
  Eigen::VectorXd draw_context(const std::vector<std::size_t>* slots, Rng& rng) const;

  std::size_t capacity_;
  double precision_;
  std::vector<Slot> slots_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
  std::size_t max_candidates_ = 0;
  std::unordered_map<StateKey, std::vector<std::size_t>> buckets_;
};

}  // namespace pgcr
