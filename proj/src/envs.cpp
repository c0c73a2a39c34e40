#include "pgcr/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pgcr/linear_models.hpp"

namespace pgcr {

namespace {

enum Stream : std::uint64_t { kWeights = 0, kContexts = 1, kRewards = 2 };

Eigen::VectorXd uniform_vector(std::size_t n, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  return v;
}

Eigen::VectorXd normal_vector(std::size_t n, double sd, Rng& rng) {
  std::normal_distribution<double> g(0.0, sd);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  return v;
}

}  // namespace

std::string to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::kLinear: return "linear";
    case RewardKind::kBernoulli: return "bernoulli";
    case RewardKind::kMixed: return "mixed";
  }
  return "unknown";
}

Eigen::VectorXd toy_weights(std::size_t dim, Rng& rng) {
  if (dim == 0) throw std::invalid_argument("context dimension must be positive");
  Eigen::VectorXd w = uniform_vector(dim, 0.0, 1.0, rng);
  // E[w^T c] = sum(w) / 2 for c uniform on the cube.
  return w / w.sum();
}

ToyBanditEnv::ToyBanditEnv(ToyConfig config, std::uint64_t seed)
    : config_(std::move(config)), context_rng_(make_rng(seed, kContexts)), reward_rng_(make_rng(seed, kRewards)) {
  if (config_.dim == 0 || config_.candidates == 0)
    throw std::invalid_argument("toy env: dimension and candidate count must be positive");
  if (!(config_.noise_r >= 0.0 && config_.noise_beta >= 0.0))
    throw std::invalid_argument("toy env: noise scales must be non-negative");
  Rng weight_rng = make_rng(seed, kWeights);
  w_r_ = config_.w_r ? *config_.w_r : toy_weights(config_.dim, weight_rng);
  w_beta_ = config_.w_beta ? *config_.w_beta : toy_weights(config_.dim, weight_rng);
  if (static_cast<std::size_t>(w_r_.size()) != config_.dim || static_cast<std::size_t>(w_beta_.size()) != config_.dim)
    throw std::invalid_argument("toy env: weight dimension mismatch");
}

CandidateSet ToyBanditEnv::sample_candidates(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CandidateSet c(static_cast<Eigen::Index>(config_.dim), static_cast<Eigen::Index>(config_.candidates));
  for (Eigen::Index j = 0; j < c.cols(); ++j)
    for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, j) = u(rng);
  return c;
}

double ToyBanditEnv::beta(const Eigen::VectorXd& context, double noise) const {
  return std::clamp(w_beta_.dot(context) + noise, 0.0, 1.0);
}

double ToyBanditEnv::reward(const Eigen::VectorXd& context, Rng& rng) const {
  std::normal_distribution<double> e_r(0.0, 1.0);
  std::normal_distribution<double> e_beta(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  switch (config_.kind) {
    case RewardKind::kLinear:
      return w_r_.dot(context) + config_.noise_r * e_r(rng);
    case RewardKind::kBernoulli:
      return coin(rng) < beta(context, config_.noise_beta * e_beta(rng)) ? 1.0 : 0.0;
    case RewardKind::kMixed: {
      const double b = beta(context, config_.noise_beta * e_beta(rng));
      if (coin(rng) >= b) return 0.0;
      return w_r_.dot(context) + config_.noise_r * e_r(rng);
    }
  }
  return 0.0;
}

Eigen::VectorXd ToyBanditEnv::oracle(const CandidateSet& candidates) const {
  Eigen::VectorXd out(candidates.cols());
  for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
    const Eigen::VectorXd c = candidates.col(j);
    switch (config_.kind) {
      case RewardKind::kLinear: out[j] = w_r_.dot(c); break;
      case RewardKind::kBernoulli: out[j] = beta(c); break;
      case RewardKind::kMixed: out[j] = beta(c) * w_r_.dot(c); break;
    }
  }
  return out;
}

std::shared_ptr<const Observation> ToyBanditEnv::reset() {
  current_ = std::make_shared<const Observation>(Observation{Eigen::VectorXd(0), sample_candidates(context_rng_)});
  return current_;
}

std::shared_ptr<const Observation> ToyBanditEnv::current() const {
  if (!current_) throw InvalidStateError("toy env: reset has not been called");
  return current_;
}

Eigen::VectorXd ToyBanditEnv::oracle_means() const { return oracle(current()->candidates); }

EnvStep ToyBanditEnv::step(std::size_t action) {
  const auto obs = current();
  if (action >= obs->size()) throw std::invalid_argument("toy env: action out of range");
  const double r = reward(obs->candidates.col(static_cast<Eigen::Index>(action)), reward_rng_);
  reset();
  return {r, false};
}

std::string ToyBanditEnv::name() const { return "toy-" + to_string(config_.kind); }

MdpCrEnv::MdpCrEnv(MdpCrConfig config, std::uint64_t seed)
    : config_(config), context_rng_(make_rng(seed, kContexts)), reward_rng_(make_rng(seed, kRewards)) {
  if (config_.dim == 0 || config_.candidates == 0 || config_.users == 0 || config_.memory == 0 ||
      config_.session_length == 0)
    throw std::invalid_argument("mdpcr: sizes must be positive");
  if (config_.catalog < config_.candidates)
    throw std::invalid_argument("mdpcr: catalog must hold at least as many items as candidates");
  if (!(config_.shared_taste >= 0.0 && config_.shared_taste <= 1.0))
    throw std::invalid_argument("mdpcr: shared taste fraction must be in [0,1]");
  Rng rng = make_rng(seed, kWeights);
  // Entries N(0, 3 s^2 / d) give tau^T c a standard deviation of s for c ~ U(-1,1)^d.
  const double sd = config_.taste_scale * std::sqrt(3.0 / static_cast<double>(config_.dim));
  const Eigen::VectorXd shared = normal_vector(config_.dim, sd, rng);
  const auto d = static_cast<Eigen::Index>(config_.dim);
  const auto feat = static_cast<Eigen::Index>(config_.dim * (config_.memory + 1));
  users_.reserve(config_.users);
  for (std::size_t u = 0; u < config_.users; ++u) {
    UserProfile p;
    p.preference = Eigen::VectorXd::Constant(feat, config_.interaction);
    p.preference.head(d) = std::sqrt(config_.shared_taste) * shared +
                           std::sqrt(1.0 - config_.shared_taste) * normal_vector(config_.dim, sd, rng);
    p.catalog.resize(d, static_cast<Eigen::Index>(config_.catalog));
    for (Eigen::Index j = 0; j < p.catalog.cols(); ++j) p.catalog.col(j) = uniform_vector(config_.dim, -1.0, 1.0, rng);
    users_.push_back(std::move(p));
  }
}

Eigen::VectorXd MdpCrEnv::features(const Eigen::VectorXd& state, const Eigen::VectorXd& context) const {
  const auto d = static_cast<Eigen::Index>(config_.dim);
  if (static_cast<std::size_t>(state.size()) != state_dim() || context.size() != d)
    throw std::invalid_argument("mdpcr: state/context dimension mismatch");
  Eigen::VectorXd f(d * static_cast<Eigen::Index>(config_.memory + 1));
  f.head(d) = context;
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(config_.memory); ++k) {
    const auto slot = state.segment(k * (d + 1), d + 1);
    const double sign = 2.0 * slot[d] - 1.0;
    f.segment((k + 1) * d, d) = sign * context.cwiseProduct(slot.head(d));
  }
  return f;
}

Eigen::VectorXd MdpCrEnv::next_state(const Eigen::VectorXd& state, const Eigen::VectorXd& item,
                                     double feedback) const {
  const auto slot = static_cast<Eigen::Index>(config_.dim + 1);
  const auto n = static_cast<Eigen::Index>(state_dim());
  if (state.size() != n || item.size() != slot - 1) throw std::invalid_argument("mdpcr: state/item dimension mismatch");
  Eigen::VectorXd next(n);
  next.head(n - slot) = state.tail(n - slot);
  next.segment(n - slot, slot - 1) = item;
  next[n - 1] = feedback;
  return next;
}

double MdpCrEnv::mean_reward(const UserProfile& user, const Eigen::VectorXd& state,
                             const Eigen::VectorXd& context) const {
  return logistic(user.preference.dot(features(state, context)));
}

void MdpCrEnv::set_preferences(const Eigen::VectorXd& preference) {
  if (preference.size() != users_.front().preference.size())
    throw std::invalid_argument("mdpcr: preference dimension mismatch");
  for (auto& u : users_) u.preference = preference;
}

CandidateSet MdpCrEnv::draw_candidates(const UserProfile& user) {
  // Partial Fisher-Yates: m distinct catalog items.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(user.catalog.cols()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  CandidateSet c(user.catalog.rows(), static_cast<Eigen::Index>(config_.candidates));
  for (std::size_t j = 0; j < config_.candidates; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, idx.size() - 1);
    std::swap(idx[j], idx[pick(context_rng_)]);
    c.col(static_cast<Eigen::Index>(j)) = user.catalog.col(idx[j]);
  }
  return c;
}

void MdpCrEnv::begin_session() {
  std::uniform_int_distribution<std::size_t> pick(0, users_.size() - 1);
  user_ = pick(context_rng_);
  session_step_ = 0;
  const Eigen::VectorXd empty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dim()));
  current_ = std::make_shared<const Observation>(Observation{empty, draw_candidates(users_[user_])});
}

std::shared_ptr<const Observation> MdpCrEnv::reset() {
  begin_session();
  return current_;
}

std::shared_ptr<const Observation> MdpCrEnv::current() const {
  if (!current_) throw InvalidStateError("mdpcr: step or observe before reset");
  return current_;
}

Eigen::VectorXd MdpCrEnv::oracle_means() const {
  const auto obs = current();
  Eigen::VectorXd out(obs->candidates.cols());
  for (Eigen::Index j = 0; j < out.size(); ++j)
    out[j] = mean_reward(users_[user_], obs->state, obs->candidates.col(j));
  return out;
}

EnvStep MdpCrEnv::step(std::size_t action) {
  const auto obs = current();
  if (action >= obs->size()) throw std::invalid_argument("mdpcr: action out of range");
  const Eigen::VectorXd item = obs->candidates.col(static_cast<Eigen::Index>(action));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double r = coin(reward_rng_) < mean_reward(users_[user_], obs->state, item) ? 1.0 : 0.0;
  ++session_step_;
  if (session_step_ >= config_.session_length) {
    begin_session();
    return {r, true};
  }
  current_ = std::make_shared<const Observation>(
      Observation{next_state(obs->state, item, r), draw_candidates(users_[user_])});
  return {r, false};
}

}  // namespace pgcr
