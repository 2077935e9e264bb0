#pragma once
// The acceptance suite: eight numbered criteria covering oracle equivalence,
// decay rates, the per-scale induction estimates, evenness, monotonicity,
// completeness of the localized family, phase-set homogeneity, and the
// randomized property suites. The CLI `verify` subcommand and the dedicated
// acceptance test binary both run exactly this code.

#include <iosfwd>
#include <string>
#include <vector>

#include "qpl/config.hpp"

namespace qpl {

struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail; // one-line metric summary, also printed on pass
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  bool all_pass() const {
    for (const auto& r : results)
      if (!r.pass) return false;
    return !results.empty();
  }
};

// Runs all criteria in order, streaming one [PASS]/[FAIL] line each to
// `log` when given. Criteria never throw: unexpected errors fail the
// criterion with the message in `detail`.
AcceptanceReport run_acceptance(const RunConfig& config, std::ostream* log);

} // namespace qpl
