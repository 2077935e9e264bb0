#pragma once
// Localized eigenpairs of (H u)(n) = u(n+1) + u(n-1) + lambda v(theta + n a) u(n).
//
// The phase -> energy map inverts the critical-point correspondence: the
// multiscale chain assigns to each spectral parameter t the limit point of
// its nested critical windows, and bisection on t matches that point to the
// requested phase. A localized eigenpair is then certified in three steps:
// stable/unstable direction limits must glue (small angle gap), the two-sided
// eigenfunction built by dominant-solution inward recurrence must satisfy the
// eigenvalue equation (small residual), and its envelope must decay at an
// exponential rate.
//
// Angle fields here use the unconjugated cocycle frame throughout.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpl/arithmetic.hpp"
#include "qpl/induction.hpp"

namespace qpl {

// ---- critical-point limit --------------------------------------------------

struct CriticalLimit {
  double c_inf = 0.0;       // branch-one critical point at the deepest scale
  double partner = 0.0;     // its even-reflection partner
  double radius = 0.0;      // conservative window bound at the deepest scale
  double drift = 0.0;       // realized |c_last - c_prev|, the sharper estimate
  double phase_coord = 0.0; // circle_dist(c_inf, z_min); increases with t
  std::vector<ScaleState> chain;
};

// Advance scales until the window radius drops below tol; DepthExceeded if the
// bound is still above tol at scale max_scales.
CriticalLimit limit_critical_point(const Potential& v, double t, double lambda,
                                   const Frequency& freq, double tol = 1e-3,
                                   const InductionOptions& opt = InductionOptions{},
                                   int max_scales = 4);

// ---- options ----------------------------------------------------------------

struct EigenOptions {
  double phase_tol = 1e-10;  // target |c_inf(t) - theta_reduced|, floor 1e-10
  double t_floor = 1e-11;    // bisection runs until the t bracket is this narrow
  double limit_tol = 1e-3;   // window-radius target for each chain
  int max_scales = 4;
  int n_max = 150;           // eigenfunction support half-width
  double gap_gate = 1e-8;    // |stable - unstable| angle gate
  double residual_scale = 1e-6;    // residual gate = scale * (2 + lambda max|v|)
  double goodness_fraction = 0.9;  // pointwise bound rate = fraction * ln lambda
  double goodness_cap = 100.0;
  std::vector<std::int64_t> schedule;             // direction depths; {} = 8..128
  std::optional<DiophantineParams> phase_class;   // NotDiophantine gate when set

  // Multiscale profile for the chains; the shallow base keeps early windows
  // wide enough that consecutive critical points stay well inside them.
  InductionOptions induction;
  EigenOptions() {
    induction.tau = 1.06;
    induction.n_base = -1;
    induction.min_base_q = 5;
  }
};

// ---- phase -> energy ---------------------------------------------------------

struct PhaseEnergy {
  double theta = 0.0;
  double theta_reduced = 0.0; // representative in [0, 1/2]; E(theta) = E(1-theta)
  double t = 0.0;             // solved spectral parameter
  double energy = 0.0;        // lambda * t
  double achieved = 0.0;      // |c_inf(t) - theta_reduced| at the solution
  int iterations = 0;
  CriticalLimit limit;
};

// Bisection on t over the open critical band (v_min, v_max). Errors:
// NoLocalizedState (lambda = 0), NoSignChange (phase outside the attainable
// range), NotDiophantine (phase-class gate), NonConvergent.
PhaseEnergy energy_for_phase(const Potential& v, double theta, double lambda,
                             const Frequency& freq,
                             const EigenOptions& opt = EigenOptions{});

// ---- direction limits ---------------------------------------------------------

struct DirectionLimits {
  double s_inf = 0.0; // limit of forward most-contracted directions
  double u_inf = 0.0; // limit of backward most-contracted directions
  double gap = 0.0;   // signed angle from u_inf to s_inf at the deepest depth
  double log_norm_fwd = 0.0; // log |A_{+n}| at the deepest depth
  double log_norm_bwd = 0.0;
  std::vector<std::int64_t> schedule;
  std::vector<double> s_increment; // consecutive projective distances
  std::vector<double> u_increment;
};

// Direction limits along a strictly increasing depth schedule ({} = doubling
// 8..128). NonCauchy when increments fail to contract geometrically; the
// default schedule suits couplings with a clear hyperbolic margin.
DirectionLimits stable_unstable_limits(const Potential& v, double x, double energy,
                                       double lambda, const Frequency& freq,
                                       std::vector<std::int64_t> schedule = {});

// ---- eigenfunction -------------------------------------------------------------

struct EigenfunctionData {
  double theta = 0.0;
  double energy = 0.0;
  double lambda = 0.0;
  int n_max = 0;
  // samples[k] = u(k - n_max), l2-normalized, peak sign positive. Entries whose
  // magnitude underflows double precision are 0 here; log_env keeps their size.
  std::vector<double> samples;
  // log_env[k] = log sqrt(u(n)^2 + u(n+1)^2) for n = k - n_max (last entry
  // log |u(n_max)|), exact in log space even past linear underflow.
  std::vector<double> log_env;
  double residual_l2 = 0.0;    // |(H - E) u|_2 over interior sites
  double residual_worst = 0.0;
  int worst_site = 0;
  double norm_bound = 0.0;     // 2 + |lambda| max |v|
  double norm_error = 0.0;     // | sum u^2 - 1 |
  int peak_site = 0;
  double seam_angle = 0.0;     // direction of (u(0), u(-1)) in [0, pi)
};

// Two-sided eigenfunction at the given energy: each tail is generated by the
// three-term recurrence run inward from a far-end seed (the decaying solution
// dominates inward), and the tails are glued at sites {-1, 0, 1} by a
// least-squares scale. The residual concentrates at the seam and measures the
// energy error; no decay or residual gates are applied here.
EigenfunctionData build_eigenfunction(const Potential& v, double energy,
                                      double lambda, const Frequency& freq,
                                      double theta, int n_max = 150);

struct DecayFit {
  double rate = 0.0;      // envelope decay per site
  double stderr_rate = 0.0;
  double intercept = 0.0;
  int samples = 0;
};

// Least-squares fit of -log_env against |n| over the outer envelope region
// |n| >= inner_fraction * n_max. InsufficientDecay when fewer than two usable
// samples remain.
DecayFit fit_decay_rate(const EigenfunctionData& data, double inner_fraction = 0.5);

struct GoodnessBound {
  double constant = 0.0; // smallest C with envelope(n) <= C exp(-rate |n|)
  double rate = 0.0;
  bool ok = false;       // constant finite and within the cap
};

GoodnessBound goodness_check(const EigenfunctionData& data, double rate,
                             double cap = 100.0);

// ---- assembled eigenpair ---------------------------------------------------------

struct LocalizedEigenpair {
  double theta = 0.0;
  double theta_reduced = 0.0;
  double energy = 0.0;
  double t = 0.0;
  double c_inf = 0.0;
  double radius = 0.0;
  double drift = 0.0;
  double s_inf = 0.0;
  double u_inf = 0.0;
  double gap = 0.0;
  EigenfunctionData fn;
  DecayFit decay;
  GoodnessBound goodness;
};

// Full pipeline with gates: phase -> energy, direction limits (gap gate),
// eigenfunction (residual gate), envelope decay (rate gate). Throws the
// first failing stage's error.
LocalizedEigenpair localized_eigenpair(const Potential& v, double theta,
                                       double lambda, const Frequency& freq,
                                       const EigenOptions& opt = EigenOptions{});

// Non-throwing wrapper recording which stage failed; for batch drivers that
// must keep going past individual failures.
struct EigenOutcome {
  bool ok = false;
  ErrorCode code = ErrorCode::Internal;
  std::string stage;   // "phase-energy", "direction-limits", "eigenfunction", "decay"
  std::string message;
  std::optional<LocalizedEigenpair> pair;
};

EigenOutcome try_localized_eigenpair(const Potential& v, double theta, double lambda,
                                     const Frequency& freq,
                                     const EigenOptions& opt = EigenOptions{});

} // namespace qpl
