#include "pgcr/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pgcr/baselines.hpp"
#include "pgcr/config.hpp"
#include "pgcr/envs.hpp"
#include "pgcr/harness.hpp"
#include "pgcr/pgcr_agent.hpp"
#include "pgcr/policy.hpp"
#include "pgcr/report.hpp"

namespace pgcr::checks {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

// Largest elementwise |a - b| / max(|a|, |b|, floor).
double max_relative_error(const nn::NetParams& a, const nn::NetParams& b, double floor = 1e-6) {
  const Eigen::VectorXd x = nn::flatten(a), y = nn::flatten(b);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double scale = std::max({std::abs(x[i]), std::abs(y[i]), floor});
    worst = std::max(worst, std::abs(x[i] - y[i]) / scale);
  }
  return worst;
}

// Random network whose output layer is not zero, so every layer gets gradient.
nn::NetParams random_net(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  return nn::mlp_init(sizes, seed);
}

Transition make_record(const Eigen::VectorXd& state, const CandidateSet& candidates, std::size_t action,
                       double reward, std::int64_t step) {
  auto obs = std::make_shared<const Observation>(Observation{state, candidates});
  return Transition{obs, action, reward, nullptr, std::nullopt, step};
}

constexpr double kFdStep = 1e-5;
constexpr double kGradTolerance = 1e-4;

}  // namespace

std::string format(const CheckResult& r) {
  return fmt("[%s] criterion %d: %s (%.1fs) %s", r.passed ? "PASS" : "FAIL", r.criterion, r.name.c_str(), r.seconds,
             r.detail.c_str());
}

// ---- criterion 1 ----

CheckResult gradient_correctness(std::size_t seeds) {
  const auto start = Clock::now();
  CheckResult out{1, "gradient correctness against central differences", false, {}, 0.0};
  double worst_mlp = 0.0, worst_marginal = 0.0, worst_pgcr = 0.0, worst_pg = 0.0;
  const std::vector<std::vector<std::size_t>> shapes = {{10, 10, 1}, {40, 10, 1}, {83, 60, 20, 1}};

  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng = make_rng(1000 + s, 11);

    // Plain network with a per-column dropout mask and a random upstream.
    for (const auto& sizes : shapes) {
      const auto net = random_net(sizes, 7 * s + sizes.size());
      const Eigen::MatrixXd x = uniform_matrix(static_cast<Eigen::Index>(sizes.front()), 4, -1.0, 1.0, rng);
      nn::DropoutSpec drop{net.layers.size() - 1, 0.5, Eigen::MatrixXd()};
      drop.mask = Eigen::MatrixXd(static_cast<Eigen::Index>(sizes[sizes.size() - 2]), 4);
      for (Eigen::Index j = 0; j < 4; ++j) drop.mask->col(j) = nn::sample_dropout_mask(drop.mask->rows(), 0.5, rng);
      const Eigen::MatrixXd upstream = uniform_matrix(1, 4, -1.0, 1.0, rng);
      const auto fwd = nn::mlp_forward_batch(net, x, &drop);
      const auto analytic = nn::mlp_backward(net, fwd.cache, upstream);
      const auto numeric = nn::finite_diff_grad(
          [&](const nn::NetParams& p) { return (nn::mlp_forward_batch(p, x, &drop).output.array() * upstream.array()).sum(); },
          net, kFdStep);
      worst_mlp = std::max(worst_mlp, max_relative_error(analytic, numeric));
    }

    // Marginal estimate with frozen resamples and mask, greed exponent != 1.
    {
      AgentHyper h;
      h.candidates = 3;
      h.resamples = 2;
      h.dropout = 0.5;
      h.hidden = {10};
      PgcrAgent agent(3, 5, h, 100 + s);
      agent.set_actor(random_net({8, 10, 1}, 200 + s));
      for (int r = 0; r < 6; ++r)
        agent.mutable_buffer().push(make_record(uniform_matrix(3, 1, -1, 1, rng).col(0),
                                                uniform_matrix(5, 3, 0, 1, rng), 0, 0.0, r));
      const Eigen::VectorXd state = uniform_matrix(3, 1, -1, 1, rng).col(0);
      const Eigen::VectorXd target = uniform_matrix(5, 1, 0, 1, rng).col(0);
      const auto est = agent.estimate_marginal(state, target, agent.sample_mask(rng), rng);
      const auto analytic = agent.marginal_grad(est);
      const auto numeric = nn::finite_diff_grad(
          [&](const nn::NetParams& p) {
            ScoreModel m{&p, agent.greed(), h.dropout};
            return marginal_values(m, std::span(&est.sample, 1)).front();
          },
          agent.actor(), kFdStep);
      worst_marginal = std::max(worst_marginal, max_relative_error(analytic, numeric));

      ScoreModel model{&agent.actor(), 2.5, h.dropout};
      const double w = 1.7;
      const auto scaled = weighted_marginal_gradient(model, std::span(&est.sample, 1), std::span(&w, 1));
      const auto scaled_fd = nn::finite_diff_grad(
          [&](const nn::NetParams& p) {
            ScoreModel m{&p, 2.5, h.dropout};
            return w * marginal_values(m, std::span(&est.sample, 1)).front();
          },
          agent.actor(), kFdStep);
      worst_marginal = std::max(worst_marginal, max_relative_error(scaled, scaled_fd));

      // Composite actor objective over a batch with frozen randomness.
      agent.set_critic(random_net({8, 10, 1}, 300 + s));
      std::vector<Transition> batch;
      for (int r = 0; r < 4; ++r)
        batch.push_back(make_record(uniform_matrix(3, 1, -1, 1, rng).col(0), uniform_matrix(5, 3, 0, 1, rng), 1, 0.5, r));
      const auto plan = agent.plan_actor_batch(batch, rng);
      const auto obj = agent.actor_objective_gradient(plan);
      const auto obj_fd = nn::finite_diff_grad(
          [&](const nn::NetParams& p) { return agent.actor_objective(p, plan); }, agent.actor(), kFdStep);
      worst_pgcr = std::max(worst_pgcr, max_relative_error(obj, obj_fd));
    }

    // Vanilla policy gradient objective.
    {
      PgAgent pg(3, 5, PgHyper{}, 400 + s);
      pg.set_actor(random_net({8, 10, 1}, 500 + s));
      std::vector<Transition> batch;
      for (int r = 0; r < 4; ++r)
        batch.push_back(make_record(uniform_matrix(3, 1, -1, 1, rng).col(0), uniform_matrix(5, 5, 0, 1, rng), 2, 1.0, r));
      const auto analytic = pg.actor_objective_gradient(batch);
      const auto numeric = nn::finite_diff_grad(
          [&](const nn::NetParams& p) { return pg.actor_objective(p, batch); }, pg.actor(), kFdStep);
      worst_pg = std::max(worst_pg, max_relative_error(analytic, numeric));
    }
  }
  const double worst = std::max({worst_mlp, worst_marginal, worst_pgcr, worst_pg});
  out.passed = worst < kGradTolerance;
  out.detail = fmt("max rel. error over %zu seeds: mlp %.2e, marginal %.2e, pgcr objective %.2e, pg objective %.2e "
                   "(tolerance %.0e)",
                   seeds, worst_mlp, worst_marginal, worst_pgcr, worst_pg, kGradTolerance);
  out.seconds = seconds_since(start);
  return out;
}

// ---- criterion 2 ----

CheckResult marginal_oracle(std::size_t draws) {
  const auto start = Clock::now();
  CheckResult out{2, "marginal estimator vs exhaustive enumeration", false, {}, 0.0};
  Rng rng = make_rng(2024, 2);
  AgentHyper h;
  h.candidates = 3;
  h.resamples = 1;
  h.dropout = 0.0;
  h.hidden = {10};
  PgcrAgent agent(0, 4, h, 5);
  agent.set_actor(random_net({4, 10, 1}, 9));
  // Two records of three candidates: six stored contexts.
  const Eigen::MatrixXd pool = uniform_matrix(4, 6, 0.0, 1.0, rng);
  agent.mutable_buffer().push(make_record(Eigen::VectorXd(0), pool.leftCols(3), 0, 0.0, 0));
  agent.mutable_buffer().push(make_record(Eigen::VectorXd(0), pool.rightCols(3), 0, 0.0, 1));
  const Eigen::VectorXd target = uniform_matrix(4, 1, 0.0, 1.0, rng).col(0);

  // Oracle scores computed directly, independent of the estimator code.
  auto raw = [&](const Eigen::VectorXd& c) {
    const auto& L = agent.actor().layers;
    const Eigen::VectorXd h1 = (L[0].weight * c + L[0].bias).cwiseMax(0.0);
    return (L[1].weight * h1 + L[1].bias)[0];
  };
  const double mu_t = std::exp(raw(target));
  std::vector<double> mu(6);
  for (int j = 0; j < 6; ++j) mu[static_cast<std::size_t>(j)] = std::exp(raw(pool.col(j)));

  // Brute force over all 36 ordered pairs.
  double brute = 0.0;
  for (double a : mu)
    for (double b : mu) brute += mu_t / (mu_t + a + b) / 36.0;
  // Multiset form: unordered pairs weighted by their multiplicity.
  double analytic = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i; j < 6; ++j) analytic += (i == j ? 1.0 : 2.0) / 36.0 * mu_t / (mu_t + mu[i] + mu[j]);

  // Library values over every tuple.
  double library = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      MarginalSample s{Eigen::VectorXd(0), target, Eigen::MatrixXd(4, 2), 1, std::nullopt};
      s.competitors << pool.col(i), pool.col(j);
      library += marginal_values(agent.score_model(), std::span(&s, 1)).front() / 36.0;
    }

  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const double v = agent.estimate_marginal(Eigen::VectorXd(0), target, std::nullopt, rng).value;
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(draws);
  const double mc = sum / n;
  const double se = std::sqrt(std::max(sum_sq / n - mc * mc, 0.0) / n);
  const double z = std::abs(mc - brute) / se;
  const bool exact = std::abs(brute - analytic) < 1e-14 && std::abs(library - brute) < 1e-12;
  out.passed = exact && z < 3.0;
  out.detail = fmt("oracle %.12f, multiset form %.12f, library enumeration %.12f, Monte Carlo %.6f +- %.2e "
                   "(%zu draws, |z| = %.2f)",
                   brute, analytic, library, mc, se, draws, z);
  out.seconds = seconds_since(start);
  return out;
}

// ---- criterion 3 ----

CheckResult objective_identity(std::size_t episodes) {
  const auto start = Clock::now();
  CheckResult out{3, "m E[R(c) p(c)] equals E[R(c_a)]", false, {}, 0.0};
  ToyConfig toy;
  toy.dim = 10;
  toy.candidates = 5;
  toy.kind = RewardKind::kLinear;
  ToyBanditEnv env(toy, 77);
  AgentHyper h;
  h.candidates = toy.candidates;
  h.dropout = 0.5;
  h.hidden = {10};
  h.replay.capacity = 100000;
  PgcrAgent agent(0, toy.dim, h, 3);
  auto actor = random_net({toy.dim, 10, 1}, 31);
  actor.layers.back().weight *= 4.0;  // a clearly non-uniform policy
  agent.set_actor(actor);

  Rng ctx_rng = make_rng(91, 1), reward_rng = make_rng(91, 2), rng = make_rng(91, 3);
  for (std::size_t r = 0; r < h.replay.capacity; ++r)
    agent.mutable_buffer().push(
        make_record(Eigen::VectorXd(0), env.sample_candidates(ctx_rng), 0, 0.0, static_cast<std::int64_t>(r)));

  const double m = static_cast<double>(toy.candidates);
  double s_res = 0.0, ss_res = 0.0, s_dir = 0.0, ss_dir = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    // Resampling side: one fresh context, its reward and its marginal estimate.
    const Eigen::VectorXd c = env.sample_candidates(ctx_rng).col(0);
    const double reward = env.reward(c, reward_rng);
    const double p_hat = agent.estimate_marginal(Eigen::VectorXd(0), c, agent.sample_mask(rng), rng).value;
    const double v = m * reward * p_hat;
    s_res += v;
    ss_res += v * v;
    // Direct side: present a candidate set, sample the policy, pay the choice.
    const CandidateSet set = env.sample_candidates(ctx_rng);
    const auto probs = agent.policy_probs(Eigen::VectorXd(0), set, agent.sample_mask(rng));
    const double r = env.reward(set.col(static_cast<Eigen::Index>(select_action(probs, rng))), reward_rng);
    s_dir += r;
    ss_dir += r * r;
  }
  const double n = static_cast<double>(episodes);
  const double mean_res = s_res / n, mean_dir = s_dir / n;
  const double se = std::sqrt((ss_res / n - mean_res * mean_res) / n + (ss_dir / n - mean_dir * mean_dir) / n);
  const double z = std::abs(mean_res - mean_dir) / se;
  out.passed = z < 3.0;
  out.detail = fmt("resampling %.5f, direct %.5f, combined s.e. %.2e, |z| = %.2f over %zu episodes", mean_res,
                   mean_dir, se, z, episodes);
  out.seconds = seconds_since(start);
  return out;
}

// ---- criterion 4 ----

namespace {

struct Moments {
  Eigen::VectorXd sum;
  Eigen::VectorXd sum_sq;
  std::size_t n = 0;

  void add(const Eigen::VectorXd& x) {
    if (n == 0) {
      sum = Eigen::VectorXd::Zero(x.size());
      sum_sq = Eigen::VectorXd::Zero(x.size());
    }
    sum += x;
    sum_sq += x.cwiseProduct(x);
    ++n;
  }
  Eigen::VectorXd mean() const { return sum / static_cast<double>(n); }
  // Sum of per-coordinate variances.
  double total_variance() const {
    const Eigen::VectorXd mu = mean();
    return (sum_sq / static_cast<double>(n) - mu.cwiseProduct(mu)).sum();
  }
};

}  // namespace

CheckResult variance_claims(std::size_t draws) {
  const auto start = Clock::now();
  CheckResult out{4, "variance of PGCR vs vanilla PG estimators", false, {}, 0.0};
  constexpr std::size_t kDim = 10, kM = 5, kPool = 1000;
  Rng rng = make_rng(4242, 4);
  const Eigen::MatrixXd pool = uniform_matrix(kDim, kPool, 0.0, 1.0, rng);
  const auto actor = random_net({kDim, 10, 1}, 41);
  const auto critic = random_net({kDim, 10, 1}, 42);
  const Eigen::VectorXd no_state(0);

  AgentHyper h;
  h.candidates = kM;
  h.resamples = 1;
  h.dropout = 0.0;
  PgcrAgent agent(0, kDim, h, 1);
  agent.set_actor(actor);
  agent.set_critic(critic);
  for (std::size_t r = 0; r < kPool / kM; ++r)
    agent.mutable_buffer().push(make_record(no_state, pool.middleCols(static_cast<Eigen::Index>(r * kM), kM), 0, 0.0,
                                            static_cast<std::int64_t>(r)));
  PgAgent pg(0, kDim, PgHyper{}, 1);
  pg.set_actor(actor);
  pg.set_critic(critic);

  std::uniform_int_distribution<Eigen::Index> pick(0, kPool - 1);
  auto draw_set = [&](std::size_t k) {
    CandidateSet c(kDim, static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < c.cols(); ++j) c.col(j) = pool.col(pick(rng));
    return c;
  };

  // Actor estimators on identical candidate sets. The centered variant shifts
  // the critic so its pool mean is zero; the softmax estimator ignores such a
  // shift, the resampling one does not.
  auto centered = critic;
  centered.layers.back().bias[0] -= nn::mlp_forward_batch(critic, pool).output.mean();
  PgcrAgent centered_agent = agent;
  centered_agent.set_critic(centered);
  AgentHyper h5 = h;
  h5.resamples = 5;
  PgcrAgent agent5(0, kDim, h5, 1);
  agent5.set_actor(actor);
  agent5.set_critic(critic);
  for (std::size_t r = 0; r < agent.buffer().size(); ++r) agent5.mutable_buffer().push(agent.buffer().at(r));
  Moments pgcr_m, pg_m, centered_m, pgcr5_m;
  for (std::size_t k = 0; k < draws; ++k) {
    std::vector<Transition> batch{make_record(no_state, draw_set(kM), 0, 0.0, 0)};
    const auto plan = agent.plan_actor_batch(batch, rng);
    pgcr_m.add(nn::flatten(agent.actor_objective_gradient(plan)));
    centered_m.add(nn::flatten(centered_agent.actor_objective_gradient(plan)));
    pgcr5_m.add(nn::flatten(agent5.actor_objective_gradient(agent5.plan_actor_batch(batch, rng))));
    pg_m.add(nn::flatten(pg.actor_objective_gradient(batch)));
  }
  const double v_pgcr = pgcr_m.total_variance(), v_pg = pg_m.total_variance();
  const double v_centered = centered_m.total_variance(), v_pgcr5 = pgcr5_m.total_variance();
  const double mean_gap = (pgcr_m.mean() - pg_m.mean()).norm() / std::max(pg_m.mean().norm(), 1e-12);
  // The inequality is claimed for every N, so both the default N = 1 and N = 5 must satisfy it.
  const bool actor_ok = v_pgcr <= v_pg && v_pgcr5 <= v_pg;

  // Critic weights: chosen-item probability with N = 5 distinct resampled groups.
  constexpr std::size_t kN = 5;
  const ScoreModel model{&actor, 1.0, 0.0};
  const std::size_t targets = 5;
  double var_p = 0.0, var_nu = 0.0;
  for (std::size_t t = 0; t < targets; ++t) {
    const Eigen::VectorXd target = pool.col(static_cast<Eigen::Index>(t));
    double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
    const std::size_t per = draws / targets;
    for (std::size_t k = 0; k < per; ++k) {
      // Distinct pool indices, none equal to the target.
      std::vector<Eigen::Index> idx;
      while (idx.size() < (kM - 1) * (kN + 1)) {
        const Eigen::Index j = pick(rng);
        if (j != static_cast<Eigen::Index>(t) && std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
      }
      MarginalSample s{no_state, target, Eigen::MatrixXd(kDim, (kM - 1) * kN), kN, std::nullopt};
      for (std::size_t j = 0; j < (kM - 1) * kN; ++j) s.competitors.col(static_cast<Eigen::Index>(j)) = pool.col(idx[j]);
      const double p = marginal_values(model, std::span(&s, 1)).front();
      CandidateSet set(kDim, kM);
      set.col(0) = target;
      for (std::size_t j = 1; j < kM; ++j) set.col(static_cast<Eigen::Index>(j)) = pool.col(idx[(kM - 1) * kN + j - 1]);
      const double nu = pg.probs(no_state, set)[0];
      s1 += p;
      q1 += p * p;
      s2 += nu;
      q2 += nu * nu;
    }
    const double n = static_cast<double>(per);
    var_p += q1 / n - (s1 / n) * (s1 / n);
    var_nu += q2 / n - (s2 / n) * (s2 / n);
  }
  const double ratio = var_p / var_nu * static_cast<double>(kN);
  const bool critic_ok = ratio >= 0.7 && ratio <= 1.3;

  out.passed = actor_ok && critic_ok;
  out.detail = fmt("actor: Var PG %.4e, PGCR N=1 %.4e, PGCR N=5 %.4e (%s), relative mean gap %.3f, PGCR N=1 with "
                   "centered critic %.4e; critic weight: N*Var(p-hat)/Var(nu) = %.3f (need [0.7, 1.3])",
                   v_pg, v_pgcr, v_pgcr5, actor_ok ? "ok" : "PGCR larger", mean_gap, v_centered, ratio);
  out.seconds = seconds_since(start);
  return out;
}

// ---- criteria 5-8: desk-scale learning curves ----

namespace {

struct Arm {
  std::string label;
  RunConfig config;
};

struct ArmResult {
  std::string label;
  std::vector<std::vector<double>> series;  // per replication
  std::vector<double> final_values;
  std::vector<double> last_quarter_share;  // regret in last quarter / first quarter
};

ArmResult run_arm(const Arm& arm, const ExperimentOptions& opt) {
  RunConfig c = arm.config;
  c.run.threads = opt.threads;
  c.run.seed = opt.seed;
  const auto start = Clock::now();
  const auto traces = run_replications(c);
  ArmResult r{arm.label, {}, {}, {}};
  const Metric metric = headline_metric(c);
  for (const auto& t : traces) {
    r.series.push_back(metric_series(t, metric));
    r.final_values.push_back(r.series.back().back());
    const auto& cum = r.series.back();
    const std::size_t q = cum.size() / 4;
    const double first = cum[q - 1];
    const double last = cum.back() - cum[cum.size() - q - 1];
    r.last_quarter_share.push_back(first > 0 ? last / first : 0.0);
  }
  if (opt.verbose)
    std::fprintf(stderr, "    %-28s final mean %.4f (%.1fs)\n", arm.label.c_str(),
                 std::accumulate(r.final_values.begin(), r.final_values.end(), 0.0) /
                     static_cast<double>(r.final_values.size()),
                 seconds_since(start));
  return r;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Desk-scale protocol of the toy comparisons. The PGCR settings are shared by
// every arm that reads them (only the pgcr and pg agents do).
RunConfig toy_config(EnvKind kind, AlgoKind algo) {
  RunConfig c;
  c.env.kind = kind;
  c.env.dim = 10;
  c.env.candidates = 5;
  c.algorithm.kind = algo;
  c.algorithm.actor_lr = 0.01;
  c.algorithm.critic_lr = 0.01;
  c.algorithm.dropout = 0.0;
  c.run.horizon = 20000;
  c.run.replications = 5;
  return c;
}

RunConfig mdpcr_config(AlgoKind algo) {
  RunConfig c;
  c.env.kind = EnvKind::kMdpCr;
  c.algorithm.kind = algo;
  c.run.horizon = 100000;
  c.run.replications = 3;
  return c;
}

std::string values(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt("%.1f", x);
  return s;
}

}  // namespace

CheckResult toy_linear_ordering(const ExperimentOptions& opt) {
  const auto start = Clock::now();
  CheckResult out{5, "toy-linear regret ordering", false, {}, 0.0};
  const auto p = run_arm({"pgcr", toy_config(EnvKind::kToyLinear, AlgoKind::kPgcr)}, opt);
  const auto l = run_arm({"linucb", toy_config(EnvKind::kToyLinear, AlgoKind::kLinUcb)}, opt);
  const auto e = run_arm({"egreedy", toy_config(EnvKind::kToyLinear, AlgoKind::kEGreedy)}, opt);
  const double rp = mean_of(p.final_values), rl = mean_of(l.final_values), re = mean_of(e.final_values);
  const double share_p = mean_of(p.last_quarter_share), share_e = mean_of(e.last_quarter_share);
  const bool vs_linucb = rp <= 1.25 * rl, vs_egreedy = rp <= 0.7 * re;
  const bool sublinear = share_p < 0.35, linear = share_e >= 0.20;
  out.passed = vs_linucb && vs_egreedy && sublinear && linear;
  out.detail = fmt("final regret pgcr %.1f, linucb %.1f, egreedy %.1f; pgcr<=1.25*linucb %s, pgcr<=0.7*egreedy %s; "
                   "last/first quarter share pgcr %.3f (<0.35 %s), egreedy %.3f (>=0.20 %s)",
                   rp, rl, re, vs_linucb ? "yes" : "NO", vs_egreedy ? "yes" : "NO", share_p, sublinear ? "yes" : "NO",
                   share_e, linear ? "yes" : "NO");
  out.seconds = seconds_since(start);
  return out;
}

CheckResult bernoulli_mixed(const ExperimentOptions& opt) {
  const auto start = Clock::now();
  CheckResult out{6, "bernoulli and mixed rewards: pgcr below glm-ucb and ts", false, {}, 0.0};
  bool ok = true;
  std::string detail;
  for (EnvKind kind : {EnvKind::kToyBernoulli, EnvKind::kToyMixed}) {
    const auto p = run_arm({to_string(kind) + " pgcr", toy_config(kind, AlgoKind::kPgcr)}, opt);
    const auto g = run_arm({to_string(kind) + " glmucb", toy_config(kind, AlgoKind::kGlmUcb)}, opt);
    const auto t = run_arm({to_string(kind) + " ts", toy_config(kind, AlgoKind::kTs)}, opt);
    std::size_t wins_g = 0, wins_t = 0;
    for (std::size_t i = 0; i < p.final_values.size(); ++i) {
      wins_g += p.final_values[i] < g.final_values[i];
      wins_t += p.final_values[i] < t.final_values[i];
    }
    const bool pass = wins_g >= 4 && wins_t >= 4;
    ok = ok && pass;
    detail += fmt("%s: pgcr [%s] glmucb [%s] ts [%s], wins vs glmucb %zu/5, vs ts %zu/5; ", to_string(kind).c_str(),
                  values(p.final_values).c_str(), values(g.final_values).c_str(), values(t.final_values).c_str(),
                  wins_g, wins_t);
  }
  out.passed = ok;
  out.detail = detail;
  out.seconds = seconds_since(start);
  return out;
}

CheckResult dropout_ablation(const ExperimentOptions& opt) {
  const auto start = Clock::now();
  CheckResult out{7, "actor-dropout 0.67 vs 0 on the mixed toy", false, {}, 0.0};
  RunConfig with = toy_config(EnvKind::kToyMixed, AlgoKind::kPgcr);
  with.algorithm.dropout = 0.67;
  RunConfig without = with;
  without.algorithm.dropout = 0.0;
  const auto a = run_arm({"dropout 0.67", with}, opt);
  const auto b = run_arm({"dropout 0", without}, opt);
  std::size_t wins = 0;
  for (std::size_t i = 0; i < a.final_values.size(); ++i)
    wins += a.final_values[i] < b.final_values[i] && a.last_quarter_share[i] < b.last_quarter_share[i];
  out.passed = wins >= 4;
  out.detail = fmt("final regret 0.67 [%s] vs 0 [%s]; last-quarter share 0.67 [%s] vs 0 [%s]; wins on both %zu/5",
                   values(a.final_values).c_str(), values(b.final_values).c_str(),
                   values(a.last_quarter_share).c_str(), values(b.last_quarter_share).c_str(), wins);
  out.seconds = seconds_since(start);
  return out;
}

CheckResult mdpcr_ordering(const ExperimentOptions& opt) {
  const auto start = Clock::now();
  CheckResult out{8, "mdp-cr average reward ordering", false, {}, 0.0};
  const auto p = run_arm({"pgcr", mdpcr_config(AlgoKind::kPgcr)}, opt);
  const auto v = run_arm({"pg", mdpcr_config(AlgoKind::kPg)}, opt);
  const auto g = run_arm({"glmucb", mdpcr_config(AlgoKind::kGlmUcb)}, opt);
  const auto t = run_arm({"ts", mdpcr_config(AlgoKind::kTs)}, opt);
  const double rp = mean_of(p.final_values), rv = mean_of(v.final_values), rg = mean_of(g.final_values),
               rt = mean_of(t.final_values);
  const double band = std_of(g.final_values);
  const bool order = rp > rv && rv > rg && rv > rt;
  const bool margin = rp - rg > band;
  out.passed = order && margin;
  out.detail = fmt("final average reward pgcr %.4f, pg %.4f, glmucb %.4f (std %.4f), ts %.4f; ordering %s, margin over "
                   "glmucb %.4f vs band %.4f",
                   rp, rv, rg, band, rt, order ? "holds" : "VIOLATED", rp - rg, band);
  out.seconds = seconds_since(start);
  return out;
}

// ---- criterion 9 ----

namespace {

std::vector<Eigen::Index> random_permutation(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Eigen::Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

CandidateSet permute(const CandidateSet& c, const std::vector<Eigen::Index>& perm) {
  CandidateSet out(c.rows(), c.cols());
  for (Eigen::Index j = 0; j < c.cols(); ++j) out.col(j) = c.col(perm[static_cast<std::size_t>(j)]);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

CheckResult structural_invariants() {
  const auto start = Clock::now();
  CheckResult out{9, "structural invariants", false, {}, 0.0};
  std::vector<std::string> failures;
  auto expect = [&failures](bool ok, const std::string& what) {
    if (!ok && std::find(failures.begin(), failures.end(), what) == failures.end()) failures.push_back(what);
  };
  Rng rng = make_rng(99, 9);
  constexpr std::size_t kState = 3, kDim = 6, kM = 5;

  // Permutation invariance of the PGCR policy under a shared dropout mask.
  AgentHyper h;
  h.candidates = kM;
  h.dropout = 0.5;
  PgcrAgent agent(kState, kDim, h, 17);
  agent.set_actor(random_net({kState + kDim, 10, 1}, 18));
  std::size_t perm_trials = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd state = uniform_matrix(kState, 1, -1, 1, rng).col(0);
    const CandidateSet c = uniform_matrix(kDim, kM, 0, 1, rng);
    const auto mask = agent.sample_mask(rng);
    const auto perm = random_permutation(kM, rng);
    const Eigen::VectorXd p = agent.policy_probs(state, c, mask);
    const Eigen::VectorXd q = agent.policy_probs(state, permute(c, perm), mask);
    bool same = true;
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kM); ++j) same = same && q[j] == p[perm[static_cast<std::size_t>(j)]];
    expect(same, "policy_probs is not permutation equivariant");
    expect(std::abs(p.sum() - 1.0) < 1e-12 && (p.array() > 0).all(), "policy_probs is not a distribution");
    ++perm_trials;
  }

  // Baseline selectors pick the same context whatever the order.
  {
    auto lin = LinearModelState::create(kDim, 1.0, 1.0);
    auto glm = GlmModelState::create(kDim, 1.0, 1.0);
    auto ts = ThompsonState::create(TsModel::kLinear, kDim, 1.0, 0.5);
    for (int k = 0; k < 30; ++k) {
      const Eigen::VectorXd x = uniform_matrix(kDim, 1, 0, 1, rng).col(0);
      const double r = x.sum() / kDim;
      linucb_update(lin, x, r);
      glmucb_update(glm, {{x, r}});
      ts_update(ts, x, r);
    }
    const auto value_net = random_net({kState + kDim, 10, 1}, 19);
    PgAgent pg(kState, kDim, PgHyper{}, 20);
    pg.set_actor(random_net({kState + kDim, 10, 1}, 21));
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd state = uniform_matrix(kState, 1, -1, 1, rng).col(0);
      const CandidateSet c = uniform_matrix(kDim, kM, 0, 1, rng);
      const auto perm = random_permutation(kM, rng);
      const CandidateSet pc = permute(c, perm);
      auto same_pick = [&](std::size_t a, std::size_t b) { return perm[b] == static_cast<Eigen::Index>(a); };
      expect(same_pick(linucb_select(lin, c), linucb_select(lin, pc)), "linucb selection depends on order");
      expect(same_pick(glmucb_select(glm, c, 50), glmucb_select(glm, pc, 50)), "glm-ucb selection depends on order");
      Rng r1 = make_rng(trial, 1), r2 = make_rng(trial, 1);
      expect(same_pick(ts_select(ts, c, r1), ts_select(ts, pc, r2)), "thompson selection depends on order");
      Rng e1 = make_rng(trial, 2), e2 = make_rng(trial, 2);
      expect(same_pick(egreedy_select(value_net, state, c, 0.0, e1), egreedy_select(value_net, state, pc, 0.0, e2)),
             "epsilon-greedy selection depends on order");
      const Eigen::VectorXd nu = pg.probs(state, c), pnu = pg.probs(state, pc);
      bool same = true;
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kM); ++j) same = same && pnu[j] == nu[perm[static_cast<std::size_t>(j)]];
      expect(same, "pg probabilities are not permutation equivariant");
      expect(std::abs(nu.sum() - 1.0) < 1e-12 && (nu.array() > 0).all(), "pg probabilities are not a distribution");
    }

    // Softmax reduction: greed exponent 1, no dropout, raw scores from the same actor.
    AgentHyper plain = h;
    plain.dropout = 0.0;
    plain.greed_cap = 1.0;
    PgcrAgent reduced(kState, kDim, plain, 22);
    reduced.set_actor(pg.actor());
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd state = uniform_matrix(kState, 1, -1, 1, rng).col(0);
      const CandidateSet c = uniform_matrix(kDim, kM, 0, 1, rng);
      const Eigen::VectorXd p = reduced.policy_probs(state, c, std::nullopt);
      // Reference: exp(raw) normalized in long double.
      Eigen::VectorXd ref(kM);
      long double total = 0;
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kM); ++j) {
        const double raw = reduced.score(state, c.col(j), std::nullopt).raw;
        ref[j] = static_cast<double>(std::exp(static_cast<long double>(raw)));
        total += std::exp(static_cast<long double>(raw));
      }
      for (Eigen::Index j = 0; j < ref.size(); ++j) ref[j] = static_cast<double>(ref[j] / total);
      worst = std::max(worst, (p - ref).cwiseAbs().maxCoeff());
      worst = std::max(worst, (p - pg.probs(state, c)).cwiseAbs().maxCoeff());
    }
    expect(worst < 1e-12, fmt("softmax reduction off by %.2e", worst));
  }

  // GLIE mechanics of the greed schedule.
  {
    const Eigen::VectorXd raw = (Eigen::VectorXd(4) << 0.3, -0.2, 0.1, 0.25).finished();
    double prev_e = 0.0, prev_max = 0.0;
    bool monotone = true, positive = true;
    for (std::int64_t t = 0; t <= 200000; t += 500) {
      const double e = greed_exponent(t, 1e-4, 10.0);
      const Eigen::VectorXd p = softmax(e * raw);
      monotone = monotone && e >= prev_e && p.maxCoeff() >= prev_max;
      positive = positive && (p.array() > 0).all();
      prev_e = e;
      prev_max = p.maxCoeff();
    }
    expect(monotone, "greed exponent or max probability decreased over time");
    expect(positive, "a finite greed exponent produced a zero probability");
    const Eigen::VectorXd limit = softmax(greed_exponent(std::int64_t{1} << 40, 1e-4, 1e9) * raw);
    expect(limit[0] > 1.0 - 1e-9, "max probability does not approach 1 as the exponent grows");
  }

  // Regret identity and end-to-end determinism on short runs.
  {
    RunConfig c;
    c.env.kind = EnvKind::kToyMixed;
    c.env.dim = 5;
    c.run.horizon = 400;
    c.run.replications = 3;
    c.algorithm.warmup = 50;
    const auto trace = run(c, 0);
    double total = 0.0;
    bool identity = true;
    for (const auto& s : trace.steps) {
      total += s.regret;
      identity = identity && s.regret >= 0.0 && s.cumulative_regret == total;
    }
    expect(identity, "cumulative regret differs from the running sum of instantaneous regret");

    const auto dir = std::filesystem::temp_directory_path();
    const std::string a = (dir / "pgcr_check_a.csv").string(), b = (dir / "pgcr_check_b.csv").string();
    c.run.threads = 1;
    write_csv(aggregate(run_replications(c), Metric::kCumulativeRegret), a);
    c.run.threads = 3;
    write_csv(aggregate(run_replications(c), Metric::kCumulativeRegret), b);
    expect(slurp(a) == slurp(b) && !slurp(a).empty(), "repeated experiment produced different CSV bytes");
    std::filesystem::remove(a);
    std::filesystem::remove(b);
  }

  out.passed = failures.empty();
  std::string joined;
  for (const auto& f : failures) joined += (joined.empty() ? "" : "; ") + f;
  out.detail = out.passed ? fmt("permutation, reduction, GLIE, normalization, regret identity, determinism all hold "
                                "(%zu permutation trials)",
                                perm_trials)
                          : joined;
  out.seconds = seconds_since(start);
  return out;
}

}  // namespace pgcr::checks
