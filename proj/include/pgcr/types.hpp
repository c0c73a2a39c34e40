#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pgcr {

using Rng = std::mt19937_64;

// Columns are the contexts of the candidates presented at one step.
using CandidateSet = Eigen::MatrixXd;

struct Observation {
  Eigen::VectorXd state;  // empty in bandit settings
  CandidateSet candidates;

  std::size_t size() const { return static_cast<std::size_t>(candidates.cols()); }
  std::size_t context_dim() const { return static_cast<std::size_t>(candidates.rows()); }
};

// Stacks the state on top of every candidate context.
inline Eigen::MatrixXd augment(const Eigen::VectorXd& state, const CandidateSet& candidates) {
  Eigen::MatrixXd out(state.size() + candidates.rows(), candidates.cols());
  if (state.size() > 0) out.topRows(state.size()) = state.replicate(1, candidates.cols());
  out.bottomRows(candidates.rows()) = candidates;
  return out;
}

inline Eigen::VectorXd augment(const Eigen::VectorXd& state, const Eigen::VectorXd& context) {
  Eigen::VectorXd out(state.size() + context.size());
  out << state, context;
  return out;
}

// Derives an independent, reproducible stream from a base seed and a stream tag.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

struct NumericFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyBufferError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidStateError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pgcr
