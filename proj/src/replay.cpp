#include "pgcr/replay.hpp"

#include <cmath>
#include <stdexcept>

namespace pgcr {

void validate(const Transition& t) {
  if (!t.current) throw std::invalid_argument("transition without an observation");
  if (t.action >= t.current->size()) throw std::invalid_argument("transition action out of range");
  if (t.next_action) {
    if (!t.next) throw std::invalid_argument("next action without a next observation");
    if (*t.next_action >= t.next->size())
      throw std::invalid_argument("transition next action out of range");
  }
}

StateKey state_bucket(const Eigen::VectorXd& state, double precision) {
  // FNV-1a over the quantized coordinates.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(state.size()));
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const auto q = static_cast<std::int64_t>(std::llround(state[i] / precision));
    mix(static_cast<std::uint64_t>(q));
  }
  return h;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double bucket_precision)
    : capacity_(capacity), precision_(bucket_precision) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  if (!(bucket_precision > 0.0)) throw std::invalid_argument("bucket precision must be positive");
  slots_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::unindex(std::size_t slot) {
  auto it = buckets_.find(slots_[slot].key);
  auto& members = it->second;
  const std::size_t pos = slots_[slot].bucket_pos;
  const std::size_t moved = members.back();
  members[pos] = moved;
  slots_[moved].bucket_pos = pos;
  members.pop_back();
  if (members.empty()) buckets_.erase(it);
}

void ReplayBuffer::push(Transition t) {
  validate(t);
  const StateKey key = state_bucket(t.state(), precision_);
  max_candidates_ = std::max(max_candidates_, t.current->size());
  std::size_t slot = head_;
  if (size_ < capacity_) {
    slots_.push_back(Slot{});
    slot = slots_.size() - 1;
    ++size_;
  } else {
    unindex(slot);
  }
  head_ = (slot + 1) % capacity_;
  auto& members = buckets_[key];
  slots_[slot] = Slot{std::move(t), key, members.size()};
  members.push_back(slot);
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  return slots_[(oldest + i) % capacity_].record;
}

std::size_t ReplayBuffer::bucket_size(StateKey key) const {
  auto it = buckets_.find(key);
  return it == buckets_.end() ? 0 : it->second.size();
}

std::vector<Transition> ReplayBuffer::sample_batch(std::size_t batch, Rng& rng) const {
  if (empty()) throw EmptyBufferError("sample_batch on an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(slots_[pick(rng)].record);
  return out;
}

Eigen::VectorXd ReplayBuffer::draw_context(const std::vector<std::size_t>* slots, Rng& rng) const {
  const std::size_t n = slots ? slots->size() : size_;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<std::size_t> cand(0, max_candidates_ - 1);
  // Rejection keeps every stored candidate equally likely when candidate
  // sets differ in size.
  for (;;) {
    const std::size_t i = pick(rng);
    const std::size_t slot = slots ? (*slots)[i] : i;
    const std::size_t j = cand(rng);
    const auto& cs = slots_[slot].record.candidates();
    if (j < static_cast<std::size_t>(cs.cols())) return cs.col(static_cast<Eigen::Index>(j));
  }
}

Eigen::MatrixXd ReplayBuffer::sample_contexts(const std::optional<StateKey>& key, std::size_t k,
                                              Rng& rng) const {
  if (k == 0) throw std::invalid_argument("sample_contexts: k must be at least 1");
  if (empty()) throw EmptyBufferError("sample_contexts on an empty replay buffer");
  const std::vector<std::size_t>* pool = nullptr;
  if (key) {
    auto it = buckets_.find(*key);
    if (it != buckets_.end()) pool = &it->second;
  }
  const auto d = slots_.front().record.candidates().rows();
  Eigen::MatrixXd out(d, static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) out.col(static_cast<Eigen::Index>(i)) = draw_context(pool, rng);
  return out;
}

}  // namespace pgcr
