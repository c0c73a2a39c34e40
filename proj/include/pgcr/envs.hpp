#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pgcr/types.hpp"

namespace pgcr {

struct EnvStep {
  double reward = 0.0;
  bool episode_end = false;
};

// A recommendation environment presents a candidate set, receives the index
// of the chosen candidate, pays a reward and moves on to the next set.
class Environment {
 public:
  virtual ~Environment() = default;

  // Starts (or restarts) the stream and returns the first observation.
  virtual std::shared_ptr<const Observation> reset() = 0;
  // Observation awaiting a choice. Throws InvalidStateError before reset.
  virtual std::shared_ptr<const Observation> current() const = 0;
  // Exact expected reward of every current candidate.
  virtual Eigen::VectorXd oracle_means() const = 0;
  virtual EnvStep step(std::size_t action) = 0;

  virtual std::size_t state_dim() const = 0;
  virtual std::size_t context_dim() const = 0;
  virtual std::size_t candidates() const = 0;
  // True when choices affect later states.
  virtual bool sequential() const { return false; }
  virtual std::string name() const = 0;
};

// ---- toy bandits: contexts uniform on the unit cube ----

enum class RewardKind { kLinear, kBernoulli, kMixed };

struct ToyConfig {
  std::size_t dim = 40;
  std::size_t candidates = 5;
  RewardKind kind = RewardKind::kLinear;
  double noise_r = 0.1;      // sd of e_r
  double noise_beta = 0.05;  // sd of e_beta
  // Drawn from the weight seed when absent.
  std::optional<Eigen::VectorXd> w_r;
  std::optional<Eigen::VectorXd> w_beta;
};

// Weights with U(0,1) entries scaled so that w^T c averages 0.5 over the cube.
Eigen::VectorXd toy_weights(std::size_t dim, Rng& rng);

class ToyBanditEnv : public Environment {
 public:
  ToyBanditEnv(ToyConfig config, std::uint64_t seed);

  CandidateSet sample_candidates(Rng& rng) const;
  double reward(const Eigen::VectorXd& context, Rng& rng) const;
  Eigen::VectorXd oracle(const CandidateSet& candidates) const;
  // clip(w_beta^T c + noise, 0, 1)
  double beta(const Eigen::VectorXd& context, double noise = 0.0) const;

  std::shared_ptr<const Observation> reset() override;
  std::shared_ptr<const Observation> current() const override;
  Eigen::VectorXd oracle_means() const override;
  EnvStep step(std::size_t action) override;

  std::size_t state_dim() const override { return 0; }
  std::size_t context_dim() const override { return config_.dim; }
  std::size_t candidates() const override { return config_.candidates; }
  std::string name() const override;

  const ToyConfig& config() const { return config_; }
  const Eigen::VectorXd& w_r() const { return w_r_; }
  const Eigen::VectorXd& w_beta() const { return w_beta_; }

 private:
  ToyConfig config_;
  Eigen::VectorXd w_r_;
  Eigen::VectorXd w_beta_;
  Rng context_rng_;
  Rng reward_rng_;
  std::shared_ptr<const Observation> current_;
};

std::string to_string(RewardKind kind);

// ---- synthetic sequential recommender ----

struct MdpCrConfig {
  std::size_t dim = 20;
  std::size_t candidates = 10;
  std::size_t users = 200;
  std::size_t catalog = 100;        // items per user
  std::size_t memory = 3;           // remembered (item, feedback) slots
  std::size_t session_length = 20;  // steps before the next user arrives
  double taste_scale = 1.0;         // sd of a user's direct preference term
  double shared_taste = 0.5;        // fraction of taste variance shared by all users
  double interaction = 0.5;         // weight on the remembered-item products
};

struct UserProfile {
  Eigen::VectorXd preference;  // u, one weight per interaction feature
  Eigen::MatrixXd catalog;     // columns are item contexts
};

// State: `memory` slots, oldest first, each holding an item context followed
// by its feedback in {0,1}. Empty slots are all zero.
class MdpCrEnv : public Environment {
 public:
  MdpCrEnv(MdpCrConfig config, std::uint64_t seed);

  // feat(s, c) = [c, (2 fb_k - 1) * (c .* x_k) for every slot k]
  Eigen::VectorXd features(const Eigen::VectorXd& state, const Eigen::VectorXd& context) const;
  // Shift register: drop the oldest slot, append (item, feedback).
  Eigen::VectorXd next_state(const Eigen::VectorXd& state, const Eigen::VectorXd& item, double feedback) const;
  double mean_reward(const UserProfile& user, const Eigen::VectorXd& state, const Eigen::VectorXd& context) const;

  std::shared_ptr<const Observation> reset() override;
  std::shared_ptr<const Observation> current() const override;
  Eigen::VectorXd oracle_means() const override;
  EnvStep step(std::size_t action) override;

  std::size_t state_dim() const override { return config_.memory * (config_.dim + 1); }
  std::size_t context_dim() const override { return config_.dim; }
  std::size_t candidates() const override { return config_.candidates; }
  bool sequential() const override { return true; }
  std::string name() const override { return "mdpcr"; }

  const MdpCrConfig& config() const { return config_; }
  const std::vector<UserProfile>& users() const { return users_; }
  std::size_t active_user() const { return user_; }
  // Test hook: replaces every user's preference vector.
  void set_preferences(const Eigen::VectorXd& preference);

 private:
  CandidateSet draw_candidates(const UserProfile& user);
  void begin_session();

  MdpCrConfig config_;
  std::vector<UserProfile> users_;
  Rng context_rng_;
  Rng reward_rng_;
  std::size_t user_ = 0;
  std::size_t session_step_ = 0;
  std::shared_ptr<const Observation> current_;
};

// ---- CSV-driven environment ----

struct DatasetSchema {
  std::string user_column;
  std::string label_column;
  std::vector<std::string> numeric_columns;
  std::vector<std::string> categorical_columns;
  std::size_t hash_budget = 32;  // one-hot width shared by all categorical columns
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line) : std::runtime_error(what), line(line) {}
  std::size_t line;
};

struct DatasetRow {
  std::string user;
  Eigen::VectorXd features;
  double label = 0.0;
};

class DatasetEnv : public Environment {
 public:
  DatasetEnv(std::vector<DatasetRow> rows, std::size_t candidates, std::uint64_t seed);

  std::shared_ptr<const Observation> reset() override;
  std::shared_ptr<const Observation> current() const override;
  Eigen::VectorXd oracle_means() const override;
  EnvStep step(std::size_t action) override;

  std::size_t state_dim() const override { return 0; }
  std::size_t context_dim() const override { return dim_; }
  std::size_t candidates() const override { return m_; }
  std::string name() const override { return "dataset"; }

  const std::vector<DatasetRow>& rows() const { return rows_; }
  std::size_t eligible_users() const { return users_.size(); }
  std::size_t excluded_users() const { return excluded_users_; }
  // Row indices behind the current candidates.
  const std::vector<std::size_t>& served_rows() const { return served_; }

 private:
  void draw();

  std::vector<DatasetRow> rows_;
  std::size_t m_;
  std::size_t dim_ = 0;
  std::vector<std::vector<std::size_t>> users_;  // row indices per eligible user
  std::size_t excluded_users_ = 0;
  Rng rng_;
  std::vector<std::size_t> served_;
  std::shared_ptr<const Observation> current_;
};

// Hash bucket of a categorical value, stable across platforms.
std::size_t categorical_bucket(const std::string& column, const std::string& value, std::size_t budget);

std::vector<DatasetRow> parse_dataset(std::istream& in, const DatasetSchema& schema);
std::unique_ptr<DatasetEnv> load_dataset_env(const std::string& path, const DatasetSchema& schema,
                                             std::size_t candidates, std::uint64_t seed);

}  // namespace pgcr
