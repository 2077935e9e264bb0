#include "qpl/induction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpl/kernel.hpp"

namespace qpl {

namespace {

constexpr double kGoldenRatio = 0.61803398874989484820;

// Unwrapped grid over [center - halfwidth, center + halfwidth]; callers wrap
// before evaluating so ordering along the interval stays monotone.
std::vector<double> interval_grid(double center, double halfwidth, int n,
                                  bool cell_centered) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  const double lo = center - halfwidth;
  const double w = 2.0 * halfwidth;
  for (int k = 0; k < n; ++k) {
    double s = cell_centered ? (k + 0.5) / n : static_cast<double>(k) / (n - 1);
    xs[static_cast<std::size_t>(k)] = lo + s * w;
  }
  return xs;
}

std::vector<double> wrapped(const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) out[k] = wrap_unit(xs[k]);
  return out;
}

// Single-phase g evaluation at one depth (0 = closed-form seed).
double gap_at(const Potential& v, double lambda, double alpha, double t,
              double x, std::int64_t depth) {
  x = wrap_unit(x);
  if (depth == 0) return std::atan(t - v(x));
  return direction_gap(v, lambda, alpha, lambda * t, x, depth, lambda).gap;
}

// g values at every requested depth over a shared phase grid, one kernel
// pass per orbit direction. Depth 0 entries use the closed-form seed.
// Result is indexed [depth index][lane].
std::vector<std::vector<double>> gap_values_multi(
    const Potential& v, double lambda, double alpha, double t,
    const std::vector<double>& xs, const std::vector<std::int64_t>& depths) {
  std::vector<std::int64_t> pos;
  for (auto d : depths)
    if (d > 0) pos.push_back(d);
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());

  DirectionBatch batch;
  if (!pos.empty())
    batch = direction_gap_batch(v, lambda, alpha, lambda * t, xs, pos, lambda);

  std::vector<std::vector<double>> out(depths.size(),
                                       std::vector<double>(xs.size()));
  for (std::size_t di = 0; di < depths.size(); ++di) {
    if (depths[di] == 0) {
      for (std::size_t k = 0; k < xs.size(); ++k)
        out[di][k] = std::atan(t - v(xs[k]));
      continue;
    }
    const std::size_t j = static_cast<std::size_t>(
        std::lower_bound(pos.begin(), pos.end(), depths[di]) - pos.begin());
    for (std::size_t k = 0; k < xs.size(); ++k) out[di][k] = batch.at[j][k].gap;
  }
  return out;
}

// Minimizer of |g| inside [xl, xr] (unwrapped coordinates): sign-change
// bisection when the bracket straddles a zero, golden section otherwise.
double refine_minimizer(const Potential& v, double lambda, double alpha,
                        double t, std::int64_t depth, double xl, double xr,
                        double gl, double gr, double tol) {
  auto g = [&](double x) { return gap_at(v, lambda, alpha, t, x, depth); };
  if (gl != 0.0 && gr != 0.0 && std::signbit(gl) != std::signbit(gr)) {
    double a = xl, b = xr, fa = gl;
    while (b - a > tol) {
      const double m = 0.5 * (a + b);
      const double fm = g(m);
      if (fm == 0.0) return m;
      if (std::signbit(fm) == std::signbit(fa)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  }
  double a = xl, b = xr;
  double x1 = b - kGoldenRatio * (b - a);
  double x2 = a + kGoldenRatio * (b - a);
  double f1 = std::fabs(g(x1));
  double f2 = std::fabs(g(x2));
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGoldenRatio * (b - a);
      f1 = std::fabs(g(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGoldenRatio * (b - a);
      f2 = std::fabs(g(x2));
    }
  }
  return 0.5 * (a + b);
}

// Zero of t - v on the monotone arc [a, b] (unwrapped; f(a) f(b) < 0).
double bisect_branch_zero(const Potential& v, double t, double a, double b) {
  double fa = t - v(wrap_unit(a));
  double fb = t - v(wrap_unit(b));
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (std::signbit(fa) == std::signbit(fb))
    fail(ErrorCode::NoBracketing, "branch endpoints do not bracket t - v");
  while (b - a > 1e-15) {
    const double m = 0.5 * (a + b);
    const double fm = t - v(wrap_unit(m));
    if (fm == 0.0) return m;
    if (std::signbit(fm) == std::signbit(fa)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Fills returns, product norms, and g samples of a state whose identity
// fields (i, t, lambda, n_base, opt, c, radius, depth, q_scale) are set.
void finish_state(ScaleState& st, const Potential& v, const Frequency& freq) {
  const double alpha = freq.alpha();
  const auto targets = st.interval_union();
  const std::int64_t n_min = st.q_scale;

  const int rg = st.opt.return_grid;
  st.ret_x.clear();
  st.ret_fwd.clear();
  st.ret_bwd.clear();
  st.ret_log_fwd.clear();
  st.ret_log_bwd.clear();
  for (int j = 0; j < 2; ++j) {
    auto xs = wrapped(interval_grid(st.c[static_cast<std::size_t>(j)], st.radius,
                                    rg, true));
    st.ret_x.insert(st.ret_x.end(), xs.begin(), xs.end());
  }
  st.r_plus = std::numeric_limits<std::int64_t>::max();
  st.r_minus = std::numeric_limits<std::int64_t>::max();
  for (double x : st.ret_x) {
    const std::int64_t rf = first_return_time(x, targets, freq, n_min,
                                              OrbitDirection::Forward,
                                              st.opt.return_cap);
    const std::int64_t rb = first_return_time(x, targets, freq, n_min,
                                              OrbitDirection::Backward,
                                              st.opt.return_cap);
    st.ret_fwd.push_back(rf);
    st.ret_bwd.push_back(rb);
    st.r_plus = std::min(st.r_plus, rf);
    st.r_minus = std::min(st.r_minus, rb);
  }
  st.r = std::min(st.r_plus, st.r_minus);

  // Raw product norms at each point's own return time, one batched pass per
  // direction over the union of realized return times.
  for (int dir = 0; dir < 2; ++dir) {
    const auto& times = (dir == 0) ? st.ret_fwd : st.ret_bwd;
    std::vector<std::int64_t> steps(times);
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());

    CocycleRequest req;
    req.lambda = st.lambda;
    req.alpha = alpha;
    req.direction = (dir == 0) ? OrbitDirection::Forward : OrbitDirection::Backward;
    req.steps = steps;
    std::vector<CocycleLane> lanes(st.ret_x.size());
    for (std::size_t k = 0; k < st.ret_x.size(); ++k)
      lanes[k] = {st.ret_x[k], st.lambda * st.t};
    auto prods = run_cocycle_batch(v, req, lanes);

    auto& logs = (dir == 0) ? st.ret_log_fwd : st.ret_log_bwd;
    logs.resize(st.ret_x.size());
    for (std::size_t k = 0; k < st.ret_x.size(); ++k) {
      const std::size_t j = static_cast<std::size_t>(
          std::lower_bound(steps.begin(), steps.end(), times[k]) - steps.begin());
      logs[k] = log_sigma_plus(prods[k][j]);
    }
  }

  // Stored g_i samples over each I_{i,j} (node grid, includes endpoints).
  for (int j = 0; j < 2; ++j) {
    auto xs = wrapped(interval_grid(st.c[static_cast<std::size_t>(j)], st.radius,
                                    st.opt.sample_points, false));
    auto gs = gap_values_multi(v, st.lambda, alpha, st.t, xs, {st.depth})[0];
    st.sample_x[static_cast<std::size_t>(j)] = std::move(xs);
    st.sample_g[static_cast<std::size_t>(j)] = std::move(gs);
  }
}

} // namespace

int default_scale_base(const Frequency& freq, std::int64_t min_q) {
  const std::size_t idx = freq.index_with_denominator_at_least(min_q);
  return static_cast<int>(idx < 1 ? 1 : idx);
}

ScaleState initialize_scale_one(const Potential& v, double t, double lambda,
                                const Frequency& freq,
                                const InductionOptions& opt) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    fail(ErrorCode::ConfigError, "coupling lambda must be positive and finite");
  if (!std::isfinite(t)) fail(ErrorCode::ConfigError, "scaled energy t must be finite");
  if (!(opt.tau > 1.0))
    fail(ErrorCode::ConfigError, "tau must exceed 1 for a summable radius schedule");
  if (opt.minimizer_grid < 8 || opt.sample_points < 3 || opt.return_grid < 1 ||
      opt.pair_points < 2 || !(opt.refine_tol > 0.0))
    fail(ErrorCode::ConfigError, "induction grid options out of range");

  const auto rep = require_cosine_type(v);
  if (!(t > rep.v_min && t < rep.v_max))
    fail(ErrorCode::NoBracketing,
         "t outside (min v, max v): the level set has no two-branch solution");

  const int n_base =
      (opt.n_base >= 0) ? opt.n_base : default_scale_base(freq, opt.min_base_q);
  if (n_base < 1 || static_cast<std::size_t>(n_base) >= freq.q.size())
    fail(ErrorCode::ConfigError, "base scale index outside the convergent table");

  // One zero of t - v per monotonicity arc between the two extremals.
  const double za = std::min(rep.z_max, rep.z_min);
  const double zb = std::max(rep.z_max, rep.z_min);
  const double c0 = wrap_unit(bisect_branch_zero(v, t, za, zb));
  const double c1 = wrap_unit(bisect_branch_zero(v, t, zb, za + 1.0));

  ScaleState st;
  st.i = 1;
  st.t = t;
  st.lambda = lambda;
  st.n_base = n_base;
  st.opt = opt;
  st.c = {std::min(c0, c1), std::max(c0, c1)};
  st.q_scale = freq.q[static_cast<std::size_t>(n_base)];
  st.q_seed = freq.q[static_cast<std::size_t>(n_base - 1)];
  st.radius = 1.0 / (2.0 * std::pow(static_cast<double>(st.q_scale), 2.0 * opt.tau));
  st.depth = 0;
  finish_state(st, v, freq);
  return st;
}

ScaleState advance_scale(const ScaleState& state, const Potential& v,
                         const Frequency& freq) {
  if (state.i < 1 || state.r <= 0)
    fail(ErrorCode::Internal, "advance_scale needs a fully constructed state");
  const int i_next = state.i + 1;
  const std::size_t qi = static_cast<std::size_t>(state.n_base + i_next - 1);
  if (qi >= freq.q.size())
    fail(ErrorCode::ConfigError,
         "continued-fraction table exhausted: deepen the frequency expansion");

  const double alpha = freq.alpha();
  const std::int64_t depth_next = state.r;
  const int m = state.opt.minimizer_grid;

  // Shared scan grid over both intervals of I_i, unwrapped per interval.
  std::vector<double> xs_raw;
  xs_raw.reserve(static_cast<std::size_t>(2 * m));
  for (int j = 0; j < 2; ++j) {
    auto xs = interval_grid(state.c[static_cast<std::size_t>(j)], state.radius, m, true);
    xs_raw.insert(xs_raw.end(), xs.begin(), xs.end());
  }
  const auto xs = wrapped(xs_raw);

  const auto gs =
      gap_values_multi(v, state.lambda, alpha, state.t, xs, {state.depth, depth_next});
  const auto& g_prev = gs[0];
  const auto& g_next = gs[1];

  std::array<double, 2> c_next{};
  for (int j = 0; j < 2; ++j) {
    const int base = j * m;
    int k_min = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      const double a = std::fabs(g_next[static_cast<std::size_t>(base + k)]);
      if (a < best) {
        best = a;
        k_min = k;
      }
    }
    if (k_min == 0 || k_min == m - 1)
      fail(ErrorCode::LostCriticalPoint,
           "no interior minimum of |g| in the critical interval");
    const double xl = xs_raw[static_cast<std::size_t>(base + k_min - 1)];
    const double xr = xs_raw[static_cast<std::size_t>(base + k_min + 1)];
    const double gl = g_next[static_cast<std::size_t>(base + k_min - 1)];
    const double gr = g_next[static_cast<std::size_t>(base + k_min + 1)];
    const double refined = refine_minimizer(v, state.lambda, alpha, state.t,
                                            depth_next, xl, xr, gl, gr,
                                            state.opt.refine_tol);
    c_next[static_cast<std::size_t>(j)] = wrap_unit(refined);
    if (circle_dist(c_next[static_cast<std::size_t>(j)],
                    state.c[static_cast<std::size_t>(j)]) > state.radius)
      fail(ErrorCode::LostCriticalPoint,
           "refined minimizer escaped its parent interval");
  }

  ScaleState next;
  next.i = i_next;
  next.t = state.t;
  next.lambda = state.lambda;
  next.n_base = state.n_base;
  next.opt = state.opt;
  next.c = c_next;
  next.q_scale = freq.q[qi];
  next.q_seed = state.q_seed;
  next.radius = 1.0 / (std::ldexp(1.0, i_next) *
                       std::pow(static_cast<double>(next.q_scale), 2.0 * state.opt.tau));
  next.depth = depth_next;
  finish_state(next, v, freq);

  // Consecutive-gap pairs: thin the scan grid, keep both depths' values.
  const int stride = m / state.opt.pair_points;
  for (int j = 0; j < 2; ++j) {
    const int base = j * m;
    for (int p = 0; p < state.opt.pair_points; ++p) {
      const std::size_t k = static_cast<std::size_t>(base + p * stride + stride / 2);
      next.pair_x.push_back(xs[k]);
      next.pair_prev.push_back(g_prev[k]);
      next.pair_next.push_back(g_next[k]);
    }
  }
  return next;
}

EstimateReport verify_scale_estimates(const ScaleState& prev, const ScaleState& next,
                                      const EstimateOptions& opt) {
  if (next.i != prev.i + 1)
    fail(ErrorCode::ConfigError, "estimate report needs consecutive scales");
  EstimateReport rep;
  rep.r_ref = (prev.depth > 0) ? prev.depth : prev.q_seed;
  const double lam = prev.lambda;
  const double rr = static_cast<double>(rep.r_ref);

  // (1) contraction of the critical points.
  rep.contraction_bound = std::pow(lam, -opt.contraction_exponent * rr);
  for (int j = 0; j < 2; ++j)
    rep.contraction[static_cast<std::size_t>(j)] =
        circle_dist(next.c[static_cast<std::size_t>(j)],
                    prev.c[static_cast<std::size_t>(j)]);
  rep.contraction_fit =
      std::max(rep.contraction[0], rep.contraction[1]) / rep.contraction_bound;
  rep.contraction_ok = rep.contraction_fit <= opt.fit_cap;

  // (2) norm growth at the realized return times on prev's grid.
  {
    double worst = std::numeric_limits<double>::infinity();
    const double ln_lam = std::log(lam);
    for (std::size_t k = 0; k < prev.ret_x.size(); ++k) {
      const double f = prev.ret_log_fwd[k] /
                       (static_cast<double>(prev.ret_fwd[k]) * ln_lam);
      const double b = prev.ret_log_bwd[k] /
                       (static_cast<double>(prev.ret_bwd[k]) * ln_lam);
      worst = std::min(worst, std::min(f, b));
    }
    rep.min_growth_ratio = worst;
    rep.growth_ok = worst >= opt.growth_floor;
  }

  // (3) cubic lower bound outside the refinement core, on next's samples.
  {
    double cmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 2; ++j) {
      const auto& sx = next.sample_x[static_cast<std::size_t>(j)];
      const auto& sg = next.sample_g[static_cast<std::size_t>(j)];
      const double cj = next.c[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < sx.size(); ++k) {
        const double d = circle_dist(sx[k], cj);
        if (d < opt.core_radius) continue;
        cmin = std::min(cmin, std::fabs(sg[k]) / (d * d * d));
      }
    }
    rep.cubic_constant = cmin;
    rep.cubic_ok = cmin > 0.0;
  }

  // (4) C0 distance of consecutive g functions on the shared pair grid.
  {
    double sup = 0.0;
    for (std::size_t k = 0; k < next.pair_x.size(); ++k)
      sup = std::max(sup, std::fabs(next.pair_next[k] - next.pair_prev[k]));
    rep.sup_gap = sup;
    rep.gap_bound = std::pow(lam, -opt.gap_exponent * rr);
    rep.gap_fit = sup / rep.gap_bound;
    rep.gap_comparable = prev.depth > 0;
    rep.gap_ok = rep.gap_comparable ? (rep.gap_fit <= opt.fit_cap) : false;
  }

  rep.evenness_prev = dist_to_integers(prev.c[0] + prev.c[1]);
  rep.evenness_next = dist_to_integers(next.c[0] + next.c[1]);
  rep.evenness_bound = 10.0 * std::pow(lam, -0.5 * rr);
  rep.evenness_ok = rep.evenness_next <= rep.evenness_bound;
  return rep;
}

SeparationResult separation_check(const ScaleState& state, const Frequency& freq) {
  SeparationResult res;
  res.threshold =
      std::pow(static_cast<double>(state.q_scale), -2.0 * state.opt.tau);
  res.worst_margin = std::numeric_limits<double>::infinity();
  const long double delta =
      static_cast<long double>(state.c[0]) - static_cast<long double>(state.c[1]);
  for (std::int64_t k = -state.q_scale; k <= state.q_scale; ++k) {
    const long double shifted = delta - static_cast<long double>(k) * freq.value;
    const double margin =
        dist_to_integers(static_cast<double>(shifted - std::floor(shifted)));
    if (margin < res.worst_margin) {
      res.worst_margin = margin;
      res.worst_k = k;
    }
  }
  res.ok = res.worst_margin >= res.threshold;
  return res;
}

double scale_gap_value(const ScaleState& state, const Potential& v,
                       const Frequency& freq, double x) {
  return gap_at(v, state.lambda, freq.alpha(), state.t, x, state.depth);
}

} // namespace qpl
