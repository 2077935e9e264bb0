#pragma once
// Completeness bookkeeping for the localized family along a phase orbit.
//
// The eigenfunctions of H(theta) are indexed by the orbit: the pair built at
// phase theta + m a, recentered to site m, is the m-th eigenfunction. Its
// weight w_m = (u_m(0)^2 + u_m(1)^2) / 2 is the average spectral mass it
// carries at sites 0 and 1, so sum_m w_m <= 1 always, with equality exactly
// when the family is complete. The report totals the computed window
// |m| <= N, adds a geometric bound for the discarded tail, and the defect
// 1 - total - tail measures the mass the construction failed to account for.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpl/eigen.hpp"

namespace qpl {

// Two-sided geometric tail: sum over |m| > half_count of constant e^{-rate |m|}.
double tail_bound(double constant, double rate, int half_count);

struct MeasureEntry {
  int m = 0;
  double theta = 0.0; // orbit phase theta + m a, wrapped
  bool ok = false;
  ErrorCode code = ErrorCode::Internal; // failing stage's code when !ok
  std::string stage;
  std::string message;
  double energy = 0.0;
  double weight = 0.0; // 0 when the entry failed
  double gap = 0.0;
  double residual = 0.0;
  double decay_rate = 0.0;
};

struct CollisionRecord {
  int m_a = 0, m_b = 0;
  double energy_a = 0.0, energy_b = 0.0;
};

struct MeasureOptions {
  int half_count = 40; // N: entries m in [-N, N]
  double distinct_tol = 1e-10;
  double tail_constant = 1.0;
  double tail_rate = 0.0; // <= 0: use ln(lambda) / 2
  std::optional<DiophantineParams> phase_class; // membership recorded, not fatal
  EigenOptions eigen;
};

struct CompletenessReport {
  double theta = 0.0;
  double lambda = 0.0;
  int half_count = 0;
  std::vector<MeasureEntry> entries; // ordered m = -N .. N
  int failures = 0;
  bool diophantine_ok = true; // base-phase membership when phase_class is set
  double diophantine_margin = 0.0;
  std::int64_t diophantine_worst_k = 0;
  double total = 0.0;  // sum of computed weights
  double tail = 0.0;   // geometric allowance for |m| > N; 0 without a certificate
  double defect = 0.0; // 1 - total - tail
  std::vector<CollisionRecord> collisions; // eigenvalue pairs closer than distinct_tol
};

// Individual entry failures are recorded, never fatal: a zero-coupling run
// fails every entry and reports defect ~ 1.
CompletenessReport completeness_check(const Potential& v, double theta,
                                      double lambda, const Frequency& freq,
                                      const MeasureOptions& opt = MeasureOptions{});

// |total(theta + delta) - total(theta)| at a reduced window size: a cheap
// probe that the truncated measure varies continuously in the phase.
struct ContinuityProbe {
  double total_base = 0.0;
  double total_shifted = 0.0;
  double difference = 0.0; // absolute
};

ContinuityProbe truncated_continuity_probe(const Potential& v, double theta,
                                           double lambda, const Frequency& freq,
                                           double delta = 1e-6, int half_count = 10,
                                           const EigenOptions& eigen = EigenOptions{});

// Covariance of the family under the shift theta -> theta + a: entry m of the
// base window visits the same orbit phase as entry m - 1 of the shifted
// window, so their energies must agree. Returns the sup energy difference
// over the overlapping entries (1.0 if membership itself disagrees).
double shift_covariance_defect(const Potential& v, double theta, double lambda,
                               const Frequency& freq,
                               const EigenOptions& eigen = EigenOptions{},
                               int half_count = 3);

// Lower bound for the phase-class measure inside the window
// [theta - sigma, theta + sigma]; ok when at least half the window survives.
struct HomogeneityResult {
  double theta = 0.0;
  double sigma = 0.0;
  double lower_bound = 0.0;
  bool ok = false;
};

HomogeneityResult homogeneity_probe(double theta, double sigma,
                                    const DiophantineParams& params,
                                    const Frequency& freq);

} // namespace qpl
