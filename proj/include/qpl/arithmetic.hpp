#pragma once
// Continued fractions, Diophantine margins, orbit return times, and
// phase-class (theta-Diophantine) interval arithmetic on the circle.

#include <cstdint>
#include <optional>
#include <vector>

#include "qpl/common.hpp"

namespace qpl {

// Irrational (or rational) frequency with its continued-fraction data.
// `value` is kept in extended precision so convergent denominators stay
// correct up to ~1e9 and long orbit sums x + k*alpha keep full doubles.
struct Frequency {
  long double value = 0.0L;             // in (0,1)
  std::vector<std::int64_t> partial_quotients; // a_1, a_2, ...
  std::vector<std::int64_t> p;          // convergent numerators
  std::vector<std::int64_t> q;          // convergent denominators (increasing)
  bool rational = false;                // expansion terminated exactly

  double alpha() const { return static_cast<double>(value); }

  static Frequency golden(int depth = 40);
  static Frequency from_value(long double x, int depth = 40);
  static Frequency from_rational(std::int64_t num, std::int64_t den, int depth = 60);

  // Smallest index n (0-based) with q[n] >= min_q.
  std::size_t index_with_denominator_at_least(std::int64_t min_q) const;
};

// Diophantine parameters. Used both for frequencies
// (dist(k a, Z) >= gamma |k|^-tau, non-strict) and for phase classes
// (dist(2 theta + k a, Z) > gamma (|k|+1)^-tau, strict).
struct DiophantineParams {
  double gamma = 0.0;
  double tau = 2.0;     // > 1
  std::int64_t kmax = 1000000;
};

// min over 1 <= k <= kmax of dist(k alpha, Z) * k^tau.
double frequency_dc_margin(const Frequency& freq, double tau, std::int64_t kmax);

struct PhaseCheckResult {
  bool member = false;
  double worst_margin = 0.0;  // min over |k| <= kmax of dist(2t + ka, Z)*(|k|+1)^tau
  std::int64_t worst_k = 0;
};

// Membership of theta in the phase class Theta_gamma^tau relative to alpha.
PhaseCheckResult phase_dc_check(double theta, const Frequency& freq,
                                const DiophantineParams& params);

// A closed arc on the circle given by center and half-width (half-width in
// (0, 1/4] in practice; the arc is {x : circle_dist(x, center) <= halfwidth}).
struct CircleInterval {
  double center = 0.0;
  double halfwidth = 0.0;
  bool contains(double x) const { return circle_dist(x, center) <= halfwidth; }
};

enum class OrbitDirection { Forward, Backward };

// First n >= n_min with x + n*alpha (or x - n*alpha) inside the target union.
// Throws CapExceeded if no hit up to `cap`.
std::int64_t first_return_time(double x, const std::vector<CircleInterval>& target,
                               const Frequency& freq, std::int64_t n_min,
                               OrbitDirection direction, std::int64_t cap);

// Excluded-phase bookkeeping for a phase class over a window [lo, hi) in [0,1).
struct PhaseClassWindow {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::pair<double, double>> excluded; // merged, clipped to window
  double excluded_measure = 0.0;
  double tail_allowance = 0.0; // bound on measure excluded by |k| > kmax
  double measure_lower_bound() const {
    double m = (hi - lo) - excluded_measure - tail_allowance;
    return m > 0.0 ? m : 0.0;
  }
};

// Intervals excluded by dist(2 theta + k alpha, Z) < gamma (|k|+1)^-tau for
// |k| <= kmax, intersected with [lo, hi); tail allowance covers |k| > kmax.
PhaseClassWindow phase_set_measure(const DiophantineParams& params,
                                   const Frequency& freq, double lo, double hi);

} // namespace qpl
