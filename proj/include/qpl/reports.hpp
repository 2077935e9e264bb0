#pragma once
// Report builders shared by the CLI and the acceptance suite. Reports are
// pure functions of the configuration: no timestamps, no environment data,
// sorted JSON keys, shortest round-trip number formatting. Identical
// configurations therefore produce byte-identical output.
//
// Every JSON block whose numbers come from a pipeline carries a "source"
// field naming the module.operation that produced them.

#include <string>

#include "qpl/config.hpp"

namespace qpl {

struct ReportResult {
  std::string text;
  int exit_code = 0; // nonzero only for structured pipeline-gate failures
};

// JSON: spectrum cover intervals and measures.
ReportResult spectrum_report(const RunConfig& config);

// JSON: per-scale states, separation checks, and transition estimates.
// Requires config.t.
ReportResult induct_report(const RunConfig& config);

// JSON: localized eigenpair at config.theta, or a structured failure with
// the failing stage (exit code 2 / 3 per the error taxonomy).
ReportResult eigen_report(const RunConfig& config);
// CSV (n, u_n, log_env). Throws on pipeline failure.
ReportResult eigen_csv(const RunConfig& config);

// JSON: completeness report over m in [-half_count, half_count].
ReportResult measure_report(const RunConfig& config);
// CSV (m, E_m, w_m, ok).
ReportResult measure_csv(const RunConfig& config);

// JSON summary / CSV (index, energy, peak_site, mass_01, spread) of the
// dense finite-box eigensystem at config.theta with half window n_max.
ReportResult oracle_report(const RunConfig& config);
ReportResult oracle_csv(const RunConfig& config);

// Shortest round-trip decimal form of x (to_chars); used for all CSV cells.
std::string format_number(double x);

} // namespace qpl
