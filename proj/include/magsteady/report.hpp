// report.hpp — the property battery behind `magsteady full-report` and the
// acceptance suite: one pass/fail verdict per claim, with the measured
// numbers in the details string.
#pragma once

#include "magsteady/io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace magsteady {

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string details;
};

class Manifest;

std::vector<CriterionResult> run_full_report(const RunConfig& cfg,
                                             std::ostream& log,
                                             Manifest* manifest = nullptr);

bool all_pass(const std::vector<CriterionResult>& results);

void print_results(const std::vector<CriterionResult>& results,
                   std::ostream& out);

}  // namespace magsteady
