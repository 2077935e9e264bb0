#include "qpl/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpl/cocycle.hpp"
#include "qpl/potential.hpp"

namespace qpl {
namespace {

constexpr double kLogFloor = -800.0; // sentinel for an exactly-zero envelope

// Phase of site n accumulated in extended precision, wrapped to [0, 1).
double site_phase(double theta, const Frequency& freq, std::int64_t n) {
  long double ph = (long double)theta + (long double)freq.alpha() * (long double)n;
  ph -= std::floor((double)ph);
  if (ph < 0.0L) ph += 1.0L;
  if (ph >= 1.0L) ph -= 1.0L;
  return (double)ph;
}

double max_abs_value(const Potential& v, int grid = 4096) {
  double m = 0.0;
  for (int i = 0; i < grid; ++i) m = std::max(m, std::fabs(v((double)i / grid)));
  return m;
}

// One tail of the three-term recurrence, run inward from a Dirichlet-style
// seed at the far end. Sites are indexed k = n + n_max; the piece fills
// k in [k_lo, k_hi]. Mantissas renormalize by exact powers of two.
struct TailPiece {
  std::vector<double> mant;
  std::vector<std::int64_t> ex;
};

TailPiece inward_tail(const Potential& v, double energy, double lambda,
                      const Frequency& freq, double theta, int n_max, bool right) {
  const int K = 2 * n_max + 1;
  TailPiece piece{std::vector<double>(K, 0.0), std::vector<std::int64_t>(K, 0)};
  double prev = 0.0, cur = 1.0;
  std::int64_t e2 = 0;
  if (right) {
    piece.mant[2 * n_max] = cur;
    // u(n-1) = (E - lambda v_n) u(n) - u(n+1), n = n_max .. 0: fills down to -1
    for (int n = n_max; n >= 0; --n) {
      double vn = lambda * v(site_phase(theta, freq, n));
      double nxt = (energy - vn) * cur - prev;
      prev = cur;
      cur = nxt;
      if (std::fabs(cur) > 0x1p512) {
        cur = std::ldexp(cur, -512);
        prev = std::ldexp(prev, -512);
        e2 += 512;
      }
      if (n - 1 >= -n_max) {
        piece.mant[n_max + n - 1] = cur;
        piece.ex[n_max + n - 1] = e2;
      }
    }
  } else {
    piece.mant[0] = cur;
    // u(n+1) = (E - lambda v_n) u(n) - u(n-1), n = -n_max .. 0: fills up to +1
    for (int n = -n_max; n <= 0; ++n) {
      double vn = lambda * v(site_phase(theta, freq, n));
      double nxt = (energy - vn) * cur - prev;
      prev = cur;
      cur = nxt;
      if (std::fabs(cur) > 0x1p512) {
        cur = std::ldexp(cur, -512);
        prev = std::ldexp(prev, -512);
        e2 += 512;
      }
      if (n + 1 <= n_max) {
        piece.mant[n_max + n + 1] = cur;
        piece.ex[n_max + n + 1] = e2;
      }
    }
  }
  if (!std::isfinite(cur))
    fail(ErrorCode::Overflow, "eigenfunction tail recurrence left the finite range");
  return piece;
}

double log_mag(double mant, std::int64_t ex) {
  if (mant == 0.0) return kLogFloor;
  return (double)ex * std::log(2.0) + std::log(std::fabs(mant));
}

} // namespace

// ---- critical-point limit ----------------------------------------------------

CriticalLimit limit_critical_point(const Potential& v, double t, double lambda,
                                   const Frequency& freq, double tol,
                                   const InductionOptions& opt, int max_scales) {
  if (!(tol > 0.0) || !std::isfinite(tol))
    fail(ErrorCode::ConfigError, "limit tol must be positive and finite");
  if (max_scales < 1)
    fail(ErrorCode::ConfigError, "max_scales must be at least 1");
  CriticalLimit out;
  out.chain.push_back(initialize_scale_one(v, t, lambda, freq, opt));
  while (out.chain.back().radius >= tol && (int)out.chain.size() < max_scales)
    out.chain.push_back(advance_scale(out.chain.back(), v, freq));
  const ScaleState& last = out.chain.back();
  if (last.radius >= tol)
    fail(ErrorCode::DepthExceeded,
         "critical-point window radius " + std::to_string(last.radius) +
             " still above tol at scale " + std::to_string(last.i));
  out.c_inf = last.c[0];
  out.partner = last.c[1];
  out.radius = last.radius;
  out.drift = out.chain.size() >= 2
                  ? circle_dist(last.c[0], out.chain[out.chain.size() - 2].c[0])
                  : last.radius;
  out.phase_coord = circle_dist(out.c_inf, require_cosine_type(v).z_min);
  return out;
}

// ---- phase -> energy -----------------------------------------------------------

PhaseEnergy energy_for_phase(const Potential& v, double theta, double lambda,
                             const Frequency& freq, const EigenOptions& opt) {
  if (!std::isfinite(theta)) fail(ErrorCode::ConfigError, "theta must be finite");
  if (!std::isfinite(lambda)) fail(ErrorCode::ConfigError, "lambda must be finite");
  if (lambda == 0.0)
    fail(ErrorCode::NoLocalizedState,
         "coupling is zero: the free operator has no localized eigenfunctions");
  if (lambda < 0.0) fail(ErrorCode::ConfigError, "lambda must be positive");
  if (!(opt.phase_tol >= 1e-10))
    fail(ErrorCode::ConfigError, "phase_tol below the supported floor 1e-10");
  if (!(opt.t_floor > 0.0) || !std::isfinite(opt.t_floor))
    fail(ErrorCode::ConfigError, "t_floor must be positive and finite");

  if (opt.phase_class) {
    PhaseCheckResult chk = phase_dc_check(theta, freq, *opt.phase_class);
    if (!chk.member)
      fail(ErrorCode::NotDiophantine,
           "phase fails its Diophantine condition at k = " +
               std::to_string(chk.worst_k) +
               " (margin " + std::to_string(chk.worst_margin) + ")");
  }

  const CosineTypeReport rep = require_cosine_type(v);
  double thr = wrap_unit(theta);
  if (thr > 0.5) thr = 1.0 - thr;

  // Chains can lose their window at extreme parameters; fall back to fewer
  // scales, and accept the deepest window even when its conservative bound
  // misses limit_tol, rather than aborting the whole bisection.
  auto eval = [&](double t) -> CriticalLimit {
    int scales = opt.max_scales;
    for (;;) {
      try {
        return limit_critical_point(v, t, lambda, freq, opt.limit_tol,
                                    opt.induction, scales);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::DepthExceeded)
          return limit_critical_point(v, t, lambda, freq, 1e300, opt.induction,
                                      scales);
        if (e.code() == ErrorCode::LostCriticalPoint && scales > 1) {
          --scales;
          continue;
        }
        throw;
      }
    }
  };

  const double pad = 1e-9 * std::max(1.0, rep.v_max - rep.v_min);
  double lo = rep.v_min + pad, hi = rep.v_max - pad;
  CriticalLimit cl_lo = eval(lo), cl_hi = eval(hi);
  double flo = cl_lo.c_inf - thr;
  double fhi = cl_hi.c_inf - thr;
  if ((flo > 0.0) == (fhi > 0.0))
    fail(ErrorCode::NoSignChange,
         "phase " + std::to_string(thr) +
             " lies outside the attainable critical-point range [" +
             std::to_string(std::min(cl_lo.c_inf, cl_hi.c_inf)) + ", " +
             std::to_string(std::max(cl_lo.c_inf, cl_hi.c_inf)) + "]");

  PhaseEnergy out;
  out.theta = theta;
  out.theta_reduced = thr;

  double t_best = (std::fabs(flo) <= std::fabs(fhi)) ? lo : hi;
  double f_best = (std::fabs(flo) <= std::fabs(fhi)) ? flo : fhi;
  CriticalLimit best = (std::fabs(flo) <= std::fabs(fhi)) ? cl_lo : cl_hi;
  int iters = 0;
  while (hi - lo > opt.t_floor && iters < 200) {
    double mid = 0.5 * (lo + hi);
    CriticalLimit cm = eval(mid);
    ++iters;
    double fm = cm.c_inf - thr;
    if (std::fabs(fm) < std::fabs(f_best)) {
      f_best = fm;
      t_best = mid;
      best = cm;
    }
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  if (!(std::fabs(f_best) <= opt.phase_tol))
    fail(ErrorCode::NonConvergent,
         "bisection stalled: |c_inf - theta| = " + std::to_string(std::fabs(f_best)) +
             " above phase_tol after " + std::to_string(iters) + " iterations");

  out.t = t_best;
  out.energy = lambda * t_best;
  out.achieved = std::fabs(f_best);
  out.iterations = iters;
  out.limit = best;
  return out;
}

// ---- direction limits ------------------------------------------------------------

DirectionLimits stable_unstable_limits(const Potential& v, double x, double energy,
                                       double lambda, const Frequency& freq,
                                       std::vector<std::int64_t> schedule) {
  if (schedule.empty()) schedule = {8, 16, 32, 64, 128};
  if (schedule.front() < 1)
    fail(ErrorCode::ConfigError, "direction schedule depths must be at least 1");
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (schedule[k] <= schedule[k - 1])
      fail(ErrorCode::ConfigError, "direction schedule must be strictly increasing");
  if (schedule.size() < 2)
    fail(ErrorCode::ConfigError, "direction schedule needs at least two depths");

  DirectionBatch batch =
      direction_gap_batch(v, lambda, freq.alpha(), energy, {wrap_unit(x)}, schedule);

  DirectionLimits out;
  out.schedule = schedule;
  for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
    out.s_increment.push_back(
        std::fabs(angle_gap(batch.at[k][0].s_angle, batch.at[k + 1][0].s_angle)));
    out.u_increment.push_back(
        std::fabs(angle_gap(batch.at[k][0].u_angle, batch.at[k + 1][0].u_angle)));
  }
  // Geometric contraction of the increments, with an absolute angle-noise
  // floor; the final increment must itself be converged.
  const double floor = 5e-13;
  for (std::size_t k = 1; k < out.s_increment.size(); ++k) {
    if (out.s_increment[k] > std::max(0.6 * out.s_increment[k - 1], floor))
      fail(ErrorCode::NonCauchy,
           "stable-direction increments fail to contract: " +
               std::to_string(out.s_increment[k - 1]) + " -> " +
               std::to_string(out.s_increment[k]));
    if (out.u_increment[k] > std::max(0.6 * out.u_increment[k - 1], floor))
      fail(ErrorCode::NonCauchy,
           "unstable-direction increments fail to contract: " +
               std::to_string(out.u_increment[k - 1]) + " -> " +
               std::to_string(out.u_increment[k]));
  }
  if (out.s_increment.back() > 1e-10 || out.u_increment.back() > 1e-10)
    fail(ErrorCode::NonCauchy, "direction limits not converged at the deepest depth");

  const DirectionData& deepest = batch.at.back()[0];
  out.s_inf = deepest.s_angle;
  out.u_inf = deepest.u_angle;
  out.gap = deepest.gap;
  out.log_norm_fwd = deepest.log_norm_fwd;
  out.log_norm_bwd = deepest.log_norm_bwd;
  return out;
}

// ---- eigenfunction ------------------------------------------------------------------

EigenfunctionData build_eigenfunction(const Potential& v, double energy,
                                      double lambda, const Frequency& freq,
                                      double theta, int n_max) {
  if (n_max < 8) fail(ErrorCode::ConfigError, "n_max must be at least 8");
  if (!std::isfinite(energy) || !std::isfinite(lambda) || !std::isfinite(theta))
    fail(ErrorCode::ConfigError, "energy, lambda, theta must be finite");
  const double th = wrap_unit(theta);
  const int K = 2 * n_max + 1;

  TailPiece right = inward_tail(v, energy, lambda, freq, th, n_max, true);
  TailPiece left = inward_tail(v, energy, lambda, freq, th, n_max, false);

  // Glue with a least-squares scale over the shared sites {-1, 0, 1}.
  const int shared[3] = {n_max - 1, n_max, n_max + 1};
  std::int64_t e_ref = right.ex[n_max];
  for (int k : shared) e_ref = std::max({e_ref, right.ex[k], left.ex[k]});
  double num = 0.0, den = 0.0;
  for (int k : shared) {
    double r = std::ldexp(right.mant[k], (int)(right.ex[k] - e_ref));
    double l = std::ldexp(left.mant[k], (int)(left.ex[k] - e_ref));
    num += r * l;
    den += l * l;
  }
  if (den == 0.0)
    fail(ErrorCode::Internal, "left tail vanished on the shared seam sites");
  const double rho = num / den;

  std::vector<double> mant(K, 0.0);
  std::vector<std::int64_t> ex(K, 0);
  for (int k = 0; k < K; ++k) {
    if (k < n_max) {
      mant[k] = left.mant[k] * rho;
      ex[k] = left.ex[k];
    } else {
      mant[k] = right.mant[k];
      ex[k] = right.ex[k];
    }
  }

  // Global shift to the peak's exponent, then linear normalization.
  double best_log = -std::numeric_limits<double>::infinity();
  std::int64_t e0 = 0;
  int peak = 0;
  for (int k = 0; k < K; ++k) {
    double lg = log_mag(mant[k], ex[k]);
    if (lg > best_log) {
      best_log = lg;
      e0 = ex[k];
      peak = k;
    }
  }
  EigenfunctionData out;
  out.theta = th;
  out.energy = energy;
  out.lambda = lambda;
  out.n_max = n_max;
  out.samples.assign(K, 0.0);
  for (int k = 0; k < K; ++k)
    out.samples[k] = std::ldexp(mant[k], (int)(ex[k] - e0));
  long double nrm2 = 0.0L;
  for (double x : out.samples) nrm2 += (long double)x * x;
  const double nrm = std::sqrt((double)nrm2);
  if (!(nrm > 0.0) || !std::isfinite(nrm))
    fail(ErrorCode::Overflow, "eigenfunction normalization failed");
  const double sign = out.samples[peak] < 0.0 ? -1.0 : 1.0;
  for (double& x : out.samples) x = sign * x / nrm;
  out.peak_site = peak - n_max;

  long double check = 0.0L;
  for (double x : out.samples) check += (long double)x * x;
  out.norm_error = std::fabs((double)check - 1.0);

  // Log envelope from the mantissa/exponent pairs: exact past underflow.
  const double log_nrm = std::log(nrm) + (double)e0 * std::log(2.0);
  out.log_env.assign(K, kLogFloor);
  for (int k = 0; k < K; ++k) {
    double l1 = log_mag(mant[k], ex[k]);
    double l2 = (k + 1 < K) ? log_mag(mant[k + 1], ex[k + 1]) : kLogFloor;
    double hi2 = std::max(l1, l2);
    if (hi2 <= kLogFloor) continue;
    double env = hi2 + 0.5 * std::log1p(std::exp(2.0 * (std::min(l1, l2) - hi2)));
    if (k + 1 >= K) env = l1;
    out.log_env[k] = env - log_nrm;
  }

  out.norm_bound = 2.0 + std::fabs(lambda) * max_abs_value(v);
  double res2 = 0.0, worst = 0.0;
  int worst_site = 0;
  for (int n = -(n_max - 1); n <= n_max - 1; ++n) {
    double vn = lambda * v(site_phase(th, freq, n));
    double r = out.samples[n_max + n + 1] + out.samples[n_max + n - 1] +
               (vn - energy) * out.samples[n_max + n];
    res2 += r * r;
    if (std::fabs(r) > worst) {
      worst = std::fabs(r);
      worst_site = n;
    }
  }
  out.residual_l2 = std::sqrt(res2);
  out.residual_worst = worst;
  out.worst_site = worst_site;
  out.seam_angle =
      wrap_angle_half(std::atan2(out.samples[n_max - 1], out.samples[n_max]));
  return out;
}

DecayFit fit_decay_rate(const EigenfunctionData& data, double inner_fraction) {
  if (!(inner_fraction >= 0.0) || !(inner_fraction < 1.0))
    fail(ErrorCode::ConfigError, "inner_fraction must lie in [0, 1)");
  const int n_max = data.n_max;
  const int cut = (int)std::ceil(inner_fraction * n_max);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (int n = -(n_max - 1); n <= n_max - 1; ++n) {
    if (std::abs(n) < cut) continue;
    double env = data.log_env[n_max + n];
    if (!(env > kLogFloor + 1.0)) continue;
    double x = std::abs(n), y = -env;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2)
    fail(ErrorCode::InsufficientDecay,
         "fewer than two usable envelope samples in the outer region");
  const double det = m * sxx - sx * sx;
  if (det == 0.0)
    fail(ErrorCode::InsufficientDecay, "degenerate envelope abscissas");
  DecayFit fit;
  fit.samples = m;
  fit.rate = (m * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.rate * sx) / m;
  double ss = 0.0;
  for (int n = -(n_max - 1); n <= n_max - 1; ++n) {
    if (std::abs(n) < cut) continue;
    double env = data.log_env[n_max + n];
    if (!(env > kLogFloor + 1.0)) continue;
    double r = -env - (fit.intercept + fit.rate * std::abs(n));
    ss += r * r;
  }
  if (m > 2) fit.stderr_rate = std::sqrt(ss / (m - 2) / (sxx - sx * sx / m));
  return fit;
}

GoodnessBound goodness_check(const EigenfunctionData& data, double rate, double cap) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    fail(ErrorCode::ConfigError, "goodness rate must be positive and finite");
  double ln_c = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < (int)data.log_env.size(); ++k) {
    double env = data.log_env[k];
    if (!(env > kLogFloor + 1.0)) continue;
    ln_c = std::max(ln_c, env + rate * std::abs(k - data.n_max));
  }
  GoodnessBound out;
  out.rate = rate;
  out.constant = std::exp(ln_c);
  out.ok = std::isfinite(out.constant) && out.constant <= cap;
  return out;
}

// ---- assembled eigenpair --------------------------------------------------------------

namespace {

LocalizedEigenpair build_pair(const Potential& v, double theta, double lambda,
                              const Frequency& freq, const EigenOptions& opt,
                              const char** stage) {
  *stage = "phase-energy";
  PhaseEnergy pe = energy_for_phase(v, theta, lambda, freq, opt);

  *stage = "direction-limits";
  DirectionLimits dl = stable_unstable_limits(v, wrap_unit(theta), pe.energy,
                                              lambda, freq, opt.schedule);
  if (std::fabs(dl.gap) > opt.gap_gate)
    fail(ErrorCode::NoLocalizedState,
         "stable and unstable directions do not glue: |gap| = " +
             std::to_string(std::fabs(dl.gap)) + " above the gate");

  LocalizedEigenpair pair;
  pair.theta = wrap_unit(theta);
  pair.theta_reduced = pe.theta_reduced;
  pair.energy = pe.energy;
  pair.t = pe.t;
  pair.c_inf = pe.limit.c_inf;
  pair.radius = pe.limit.radius;
  pair.drift = pe.limit.drift;
  pair.s_inf = dl.s_inf;
  pair.u_inf = dl.u_inf;
  pair.gap = dl.gap;

  *stage = "eigenfunction";
  pair.fn = build_eigenfunction(v, pe.energy, lambda, freq, theta, opt.n_max);
  const double gate = opt.residual_scale * pair.fn.norm_bound;
  if (pair.fn.residual_l2 > gate)
    fail(ErrorCode::ResidualTooLarge,
         "eigenvalue-equation residual " + std::to_string(pair.fn.residual_l2) +
             " above gate " + std::to_string(gate));

  *stage = "decay";
  pair.decay = fit_decay_rate(pair.fn);
  if (pair.decay.samples < 20 || !(pair.decay.rate > 0.0))
    fail(ErrorCode::InsufficientDecay,
         "envelope decay fit unusable: rate " + std::to_string(pair.decay.rate) +
             " over " + std::to_string(pair.decay.samples) + " samples");

  const double gamma = opt.goodness_fraction * std::log(lambda);
  if (gamma > 0.0) {
    pair.goodness = goodness_check(pair.fn, gamma, opt.goodness_cap);
  } else {
    pair.goodness =
        GoodnessBound{std::numeric_limits<double>::infinity(), gamma, false};
  }
  return pair;
}

} // namespace

LocalizedEigenpair localized_eigenpair(const Potential& v, double theta,
                                       double lambda, const Frequency& freq,
                                       const EigenOptions& opt) {
  const char* stage = "";
  return build_pair(v, theta, lambda, freq, opt, &stage);
}

EigenOutcome try_localized_eigenpair(const Potential& v, double theta, double lambda,
                                     const Frequency& freq, const EigenOptions& opt) {
  EigenOutcome out;
  const char* stage = "";
  try {
    out.pair = build_pair(v, theta, lambda, freq, opt, &stage);
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.code = e.code();
    out.stage = stage;
    out.message = e.what();
  }
  return out;
}

} // namespace qpl
