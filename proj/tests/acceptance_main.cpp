// Acceptance suite: the desk-scale property battery on the reference torus
// (R = 0.3, r = 0.1, N = 48, lambda = 50 * 2^j). Prints one PASS/FAIL line
// per criterion; exits nonzero if any criterion fails.
#include "magsteady/report.hpp"

#include <iostream>

int main() {
  using namespace magsteady;
  RunConfig cfg;  // defaults are the reference configuration
  cfg.validate();
  cfg.outdir = "acceptance_out";
  Manifest man(cfg.outdir, "acceptance");

  std::vector<CriterionResult> results = run_full_report(cfg, std::cout, &man);
  std::cout << "\n=== acceptance summary ===\n";
  print_results(results, std::cout);
  const bool ok = all_pass(results);
  std::cout << (ok ? "ALL CRITERIA PASS\n" : "SOME CRITERIA FAILED\n");
  return ok ? 0 : 1;
}
