#include "qpl/lmeasure.hpp"

#include <algorithm>
#include <cmath>

namespace qpl {

double tail_bound(double constant, double rate, int half_count) {
  if (!(constant >= 0.0) || !std::isfinite(constant))
    fail(ErrorCode::ConfigError, "tail constant must be nonnegative and finite");
  if (!(rate > 0.0) || !std::isfinite(rate))
    fail(ErrorCode::ConfigError, "tail rate must be positive and finite");
  if (half_count < 0) fail(ErrorCode::ConfigError, "tail half_count must be >= 0");
  const double r = std::exp(-rate);
  return 2.0 * constant * std::exp(-rate * (half_count + 1)) / (1.0 - r);
}

CompletenessReport completeness_check(const Potential& v, double theta,
                                      double lambda, const Frequency& freq,
                                      const MeasureOptions& opt) {
  if (opt.half_count < 0)
    fail(ErrorCode::ConfigError, "half_count must be nonnegative");
  if (opt.half_count > 100)
    fail(ErrorCode::ConfigError, "half_count above the supported window of 100");
  if (opt.eigen.n_max < opt.half_count + 1)
    fail(ErrorCode::ConfigError,
         "eigen n_max must exceed half_count so recentered sites stay in range");

  CompletenessReport rep;
  rep.theta = wrap_unit(theta);
  rep.lambda = lambda;
  rep.half_count = opt.half_count;

  if (opt.phase_class) {
    PhaseCheckResult chk = phase_dc_check(rep.theta, freq, *opt.phase_class);
    rep.diophantine_ok = chk.member;
    rep.diophantine_margin = chk.worst_margin;
    rep.diophantine_worst_k = chk.worst_k;
  }

  const int N = opt.half_count;
  const int n_max = opt.eigen.n_max;
  for (int m = -N; m <= N; ++m) {
    MeasureEntry entry;
    entry.m = m;
    // orbit phase accumulated in extended precision
    long double ph = (long double)rep.theta + (long double)freq.alpha() * m;
    ph -= std::floor((double)ph);
    if (ph < 0.0L) ph += 1.0L;
    if (ph >= 1.0L) ph -= 1.0L;
    entry.theta = (double)ph;

    EigenOutcome out = try_localized_eigenpair(v, entry.theta, lambda, freq, opt.eigen);
    if (!out.ok) {
      entry.ok = false;
      entry.code = out.code;
      entry.stage = out.stage;
      entry.message = out.message;
      ++rep.failures;
    } else {
      const LocalizedEigenpair& p = *out.pair;
      entry.ok = true;
      entry.energy = p.energy;
      entry.gap = p.gap;
      entry.residual = p.fn.residual_l2;
      entry.decay_rate = p.decay.rate;
      // recentered to site m, the pair carries mass u(-m), u(1-m) at sites 0, 1
      const double u0 = p.fn.samples[n_max - m];
      const double u1 = p.fn.samples[n_max - m + 1];
      entry.weight = 0.5 * (u0 * u0 + u1 * u1);
      rep.total += entry.weight;
    }
    rep.entries.push_back(std::move(entry));
  }

  // geometric tail allowance only when the window produced decay certificates
  const bool any_ok = rep.failures < (int)rep.entries.size();
  double rate = opt.tail_rate;
  if (rate <= 0.0) rate = lambda > 1.0 ? 0.5 * std::log(lambda) : 0.0;
  rep.tail = (any_ok && rate > 0.0) ? tail_bound(opt.tail_constant, rate, N) : 0.0;
  rep.defect = 1.0 - rep.total - rep.tail;

  // eigenvalue distinctness within the window
  std::vector<std::pair<double, int>> eig;
  for (const MeasureEntry& e : rep.entries)
    if (e.ok) eig.emplace_back(e.energy, e.m);
  std::sort(eig.begin(), eig.end());
  for (std::size_t i = 1; i < eig.size(); ++i)
    if (std::fabs(eig[i].first - eig[i - 1].first) < opt.distinct_tol)
      rep.collisions.push_back(CollisionRecord{eig[i - 1].second, eig[i].second,
                                               eig[i - 1].first, eig[i].first});
  return rep;
}

ContinuityProbe truncated_continuity_probe(const Potential& v, double theta,
                                           double lambda, const Frequency& freq,
                                           double delta, int half_count,
                                           const EigenOptions& eigen) {
  MeasureOptions opt;
  opt.half_count = half_count;
  opt.eigen = eigen;
  ContinuityProbe probe;
  probe.total_base = completeness_check(v, theta, lambda, freq, opt).total;
  probe.total_shifted = completeness_check(v, theta + delta, lambda, freq, opt).total;
  probe.difference = std::fabs(probe.total_shifted - probe.total_base);
  return probe;
}

double shift_covariance_defect(const Potential& v, double theta, double lambda,
                               const Frequency& freq, const EigenOptions& eigen,
                               int half_count) {
  // The family is an orbit object: entry m of the window at theta visits the
  // same phase as entry m - 1 of the window at theta + a, so their energies
  // must agree up to the rounding of the two phase paths.
  MeasureOptions opt;
  opt.half_count = half_count;
  opt.eigen = eigen;
  CompletenessReport base = completeness_check(v, theta, lambda, freq, opt);
  CompletenessReport shifted =
      completeness_check(v, theta + freq.alpha(), lambda, freq, opt);
  const int N = half_count;
  double worst = 0.0;
  for (int m = -N + 1; m <= N; ++m) {
    const MeasureEntry& a = base.entries[m + N];
    const MeasureEntry& b = shifted.entries[m - 1 + N];
    if (a.ok != b.ok) return 1.0; // family membership itself must be covariant
    if (a.ok) worst = std::max(worst, std::fabs(a.energy - b.energy));
  }
  return worst;
}

HomogeneityResult homogeneity_probe(double theta, double sigma,
                                    const DiophantineParams& params,
                                    const Frequency& freq) {
  if (!(sigma > 0.0) || !(sigma <= 0.25))
    fail(ErrorCode::ConfigError, "sigma must lie in (0, 1/4]");
  HomogeneityResult out;
  out.theta = wrap_unit(theta);
  out.sigma = sigma;
  PhaseClassWindow win =
      phase_set_measure(params, freq, out.theta - sigma, out.theta + sigma);
  out.lower_bound = win.measure_lower_bound();
  out.ok = out.lower_bound >= sigma;
  return out;
}

} // namespace qpl
