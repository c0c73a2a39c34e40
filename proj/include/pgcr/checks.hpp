#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Property checks over the whole stack, shared by the acceptance binary and
// the `check` subcommand. Each returns a verdict plus the measured numbers.
namespace pgcr::checks {

struct CheckResult {
  int criterion = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Options for the long empirical comparisons.
struct ExperimentOptions {
  std::size_t threads = 0;  // 0: one per hardware thread
  std::uint64_t seed = 1;
  bool verbose = false;
};

CheckResult gradient_correctness(std::size_t seeds = 20);
CheckResult marginal_oracle(std::size_t draws = 1000000);
CheckResult objective_identity(std::size_t episodes = 100000);
CheckResult variance_claims(std::size_t draws = 100000);
CheckResult toy_linear_ordering(const ExperimentOptions& opt = {});
CheckResult bernoulli_mixed(const ExperimentOptions& opt = {});
CheckResult dropout_ablation(const ExperimentOptions& opt = {});
CheckResult mdpcr_ordering(const ExperimentOptions& opt = {});
CheckResult structural_invariants();

// "PASS"/"FAIL" line for one result.
std::string format(const CheckResult& r);

}  // namespace pgcr::checks
