// Acceptance run: one PASS/FAIL line per criterion.
//
//   pgcr_acceptance            every criterion
//   pgcr_acceptance 1 2 9      a subset
//   pgcr_acceptance --verbose  also print per-arm progress to stderr
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "pgcr/checks.hpp"

int main(int argc, char** argv) {
  namespace ck = pgcr::checks;
  ck::ExperimentOptions opt;
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--verbose") {
      opt.verbose = true;
    } else {
      wanted.insert(std::atoi(arg.c_str()));
    }
  }
  const std::vector<std::pair<int, std::function<ck::CheckResult()>>> all = {
      {1, [] { return ck::gradient_correctness(); }},
      {2, [] { return ck::marginal_oracle(); }},
      {3, [] { return ck::objective_identity(); }},
      {4, [] { return ck::variance_claims(); }},
      {5, [&] { return ck::toy_linear_ordering(opt); }},
      {6, [&] { return ck::bernoulli_mixed(opt); }},
      {7, [&] { return ck::dropout_ablation(opt); }},
      {8, [&] { return ck::mdpcr_ordering(opt); }},
      {9, [] { return ck::structural_invariants(); }},
  };
  int failures = 0;
  for (const auto& [id, check] : all) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto r = check();
    failures += !r.passed;
    std::printf("%s\n", ck::format(r).c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
