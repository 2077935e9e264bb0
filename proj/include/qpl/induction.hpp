#pragma once
// Multiscale induction on critical intervals. Each scale i tracks the two
// phase-symmetric minimizers c_{i,1}, c_{i,2} of the scale's angle-gap
// function g_i, shrinks the interval radius against the next convergent
// denominator, and derives the return times that set the depth of g_{i+1}.
//
// Angle convention: g_1(x) = arctan(t - v(x)) is the closed-form seed; for
// i >= 2, g_i is the signed gap between the most contracted directions of
// the forward and backward products at depth r_{i-1}, measured in the
// diag(sqrt(lambda), 1/sqrt(lambda))-conjugated frame so that the seed and
// the finite-depth gaps share one angle parameterization. Norm estimates
// always use the unconjugated products.

#include <array>
#include <cstdint>
#include <vector>

#include "qpl/arithmetic.hpp"
#include "qpl/cocycle.hpp"
#include "qpl/potential.hpp"

namespace qpl {

struct InductionOptions {
  double tau = 2.0;              // radius exponent, > 1
  int n_base = -1;               // convergent index of the base scale; -1 = auto
  std::int64_t min_base_q = 20;  // auto rule: smallest index with q >= this
  std::int64_t return_cap = 1000000;
  int minimizer_grid = 2048;     // |g| scan points per interval
  int sample_points = 257;       // stored g samples per interval
  int return_grid = 32;          // return-time grid points per interval
  int pair_points = 128;         // stored consecutive-gap samples per interval
  double refine_tol = 1e-12;     // minimizer refinement width
};

// Smallest convergent index whose denominator is at least min_q.
int default_scale_base(const Frequency& freq, std::int64_t min_q = 20);

// One fully constructed induction scale. The critical interval is
// I_i = I_{i,1} u I_{i,2} with I_{i,j} = [c[j] - radius, c[j] + radius].
struct ScaleState {
  int i = 0;                 // scale index, >= 1
  double t = 0.0;            // scaled energy E / lambda
  double lambda = 0.0;
  int n_base = 0;            // convergent index N of the base scale
  InductionOptions opt;

  std::array<double, 2> c{}; // critical points in [0, 1), one per branch
  double radius = 0.0;       // 1 / (2^i q_{N+i-1}^{2 tau})
  std::int64_t depth = 0;    // cocycle depth of g_i (0 = closed-form seed)

  std::int64_t q_scale = 0;  // q_{N+i-1}, the return-time floor of this scale
  std::int64_t q_seed = 0;   // q_{N-1}, the depth convention for the seed g_1

  std::int64_t r_plus = 0;   // min forward return time of I_i, >= q_{N+i-1}
  std::int64_t r_minus = 0;  // min backward return time of I_i
  std::int64_t r = 0;        // min(r_plus, r_minus); depth of g_{i+1}

  // g_i sampled over I_{i,1} then I_{i,2} (sample_points each).
  std::array<std::vector<double>, 2> sample_x;
  std::array<std::vector<double>, 2> sample_g;

  // Return-time grid over I_i with per-point times and product norms
  // log |A_{+r+(x)}(x)| and log |A_{-r-(x)}(x)|.
  std::vector<double> ret_x;
  std::vector<std::int64_t> ret_fwd, ret_bwd;
  std::vector<double> ret_log_fwd, ret_log_bwd;

  // Consecutive-gap pairs on a shared grid of I_{i-1}: g_{i-1}-values and
  // g_i-values at the same phases (empty at scale one).
  std::vector<double> pair_x, pair_prev, pair_next;

  CircleInterval interval(int j) const { return {c[static_cast<std::size_t>(j)], radius}; }
  std::vector<CircleInterval> interval_union() const {
    return {interval(0), interval(1)};
  }
};

// Scale one: c_{1,j} are the zeros of t - v(x), one per monotonicity branch
// of v; g_1 = arctan(t - v). Throws NoBracketing when t is outside
// (min v, max v) so the zeros do not exist.
ScaleState initialize_scale_one(const Potential& v, double t, double lambda,
                                const Frequency& freq,
                                const InductionOptions& opt = {});

// Scale i -> i+1: evaluates g_{i+1} (depth r_i) over I_i, locates the new
// minimizers inside each I_{i,j}, shrinks the radius, and computes the new
// return data. Throws LostCriticalPoint when an argmin sits in an edge cell
// of the scan grid (the energy has drifted off the spectrum at this scale),
// CapExceeded when a return-time search exhausts its cap.
ScaleState advance_scale(const ScaleState& state, const Potential& v,
                         const Frequency& freq);

struct EstimateOptions {
  double contraction_exponent = 0.7; // (1) |c_{i+1}-c_i| <= C lambda^(-e1 r)
  double growth_floor = 0.9;         // (2) log|A_{+-r}| / (r ln lambda) >= this
  double gap_exponent = 1.2;         // (4) |g_{i+1}-g_i|_C0 <= C lambda^(-e4 r)
  double core_radius = 1e-10;        // (3) excluded core around each c
  double fit_cap = 10.0;             // accepted bound on fitted constants
};

// Report-only verification of the four per-scale estimates across one
// transition prev -> next, plus the evenness residuals. r_ref is the depth
// of g_prev (q_{N-1} by convention when prev is the closed-form seed).
struct EstimateReport {
  std::int64_t r_ref = 0;

  // (1) contraction of the critical points.
  std::array<double, 2> contraction{};  // |c_next - c_prev| per branch
  double contraction_bound = 0.0;       // lambda^(-e1 r_ref)
  double contraction_fit = 0.0;         // max contraction / bound
  bool contraction_ok = false;

  // (2) norm growth on prev's return grid, both directions.
  double min_growth_ratio = 0.0;
  bool growth_ok = false;

  // (3) cubic lower bound on next's samples outside the core.
  double cubic_constant = 0.0;          // min |g|/|x-c|^3
  bool cubic_ok = false;

  // (4) C0 distance of consecutive gap functions on the shared grid.
  double sup_gap = 0.0;
  double gap_bound = 0.0;               // lambda^(-e4 r_ref)
  double gap_fit = 0.0;
  bool gap_comparable = false;          // like-convention pair (prev depth > 0)
  bool gap_ok = false;                  // only meaningful when comparable

  // Evenness residuals |c_1 + c_2| mod 1 at prev and next.
  double evenness_prev = 0.0;
  double evenness_next = 0.0;
  double evenness_bound = 0.0;          // 10 lambda^(-r_ref / 2)
  bool evenness_ok = false;
};

EstimateReport verify_scale_estimates(const ScaleState& prev, const ScaleState& next,
                                      const EstimateOptions& opt = {});

// Resonance separation of the two critical points:
// dist(c_1 - c_2 - k alpha, Z) >= q_{N+i-1}^(-2 tau) for all |k| <= q_{N+i-1}.
struct SeparationResult {
  bool ok = false;
  std::int64_t worst_k = 0;
  double worst_margin = 0.0;
  double threshold = 0.0;
};

SeparationResult separation_check(const ScaleState& state, const Frequency& freq);

// Convenience: single-phase g_i evaluation (closed-form seed at depth 0,
// conjugated-frame gap otherwise).
double scale_gap_value(const ScaleState& state, const Potential& v,
                       const Frequency& freq, double x);

} // namespace qpl
