#include "qpl/arithmetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpl {

namespace {

constexpr std::int64_t kDenominatorCap = 2'000'000'000'000'000LL; // ~2e15
// Gauss-map expansion of a floating value is trustworthy only while
// q_n^2 * eps(long double) << 1; stop well before that point.
constexpr std::int64_t kFloatDenominatorCap = 1'000'000'000LL;

long double frac_ld(long double x) {
  long double y = x - std::floor(x);
  if (y >= 1.0L) y -= 1.0L;
  if (y < 0.0L) y += 1.0L;
  return y;
}

long double dist_to_int_ld(long double x) {
  long double y = frac_ld(x);
  return (y <= 0.5L) ? y : 1.0L - y;
}

// Convergent recurrence state: h_{n} = a_n h_{n-1} + h_{n-2}, same for k_n,
// seeded with h_{-1} = 1, h_0 = 0 and k_{-1} = 0, k_0 = 1 for [0; a1, a2, ...].
struct ConvergentState {
  std::int64_t p2 = 1, p1 = 0;
  std::int64_t q2 = 0, q1 = 1;

  bool push(Frequency& f, std::int64_t a, std::int64_t q_cap) {
    if (a < 1) return false;
    if (q1 > (q_cap - q2) / a) return false;
    std::int64_t pn = a * p1 + p2;
    std::int64_t qn = a * q1 + q2;
    f.partial_quotients.push_back(a);
    f.p.push_back(pn);
    f.q.push_back(qn);
    p2 = p1; p1 = pn;
    q2 = q1; q1 = qn;
    return true;
  }
};

} // namespace

Frequency Frequency::golden(int depth) {
  // All partial quotients equal 1; build the expansion exactly so convergent
  // denominators are true Fibonacci numbers at every depth.
  Frequency f;
  f.value = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  ConvergentState st;
  for (int n = 0; n < depth; ++n)
    if (!st.push(f, 1, kDenominatorCap)) break;
  return f;
}

Frequency Frequency::from_value(long double x, int depth) {
  if (!(x > 0.0L && x < 1.0L))
    fail(ErrorCode::ConfigError, "frequency value must lie in (0,1)");
  Frequency f;
  f.value = x;
  ConvergentState st;
  for (int n = 0; n < depth; ++n) {
    if (x < 1e-17L) { f.rational = true; break; }
    long double inv = 1.0L / x;
    long double fl = std::floor(inv);
    std::int64_t a = static_cast<std::int64_t>(fl);
    if (a < 1) a = 1;
    x = inv - fl;
    if (!st.push(f, a, kFloatDenominatorCap)) break;
  }
  return f;
}

Frequency Frequency::from_rational(std::int64_t num, std::int64_t den, int depth) {
  if (den <= 0 || num <= 0 || num >= den)
    fail(ErrorCode::ConfigError, "rational frequency must satisfy 0 < p/q < 1");
  if (den > kDenominatorCap)
    fail(ErrorCode::ConfigError, "rational frequency denominator too large");
  Frequency f;
  f.value = static_cast<long double>(num) / static_cast<long double>(den);
  f.rational = true;
  // Exact Euclidean expansion of num/den.
  ConvergentState st;
  std::int64_t u = num, v = den;
  for (int n = 0; n < depth && u != 0; ++n) {
    std::int64_t a = v / u;
    std::int64_t r = v % u;
    if (!st.push(f, a, kDenominatorCap)) break;
    v = u;
    u = r;
  }
  return f;
}

std::size_t Frequency::index_with_denominator_at_least(std::int64_t min_q) const {
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] >= min_q) return i;
  fail(ErrorCode::ConfigError, "continued-fraction expansion too short for requested denominator");
}

double frequency_dc_margin(const Frequency& freq, double tau, std::int64_t kmax) {
  if (kmax < 1) fail(ErrorCode::ConfigError, "kmax must be positive");
  long double y = 0.0L;
  long double best = std::numeric_limits<long double>::max();
  // margin_k = dist(k a, Z) * k^tau; skip the pow unless d * w_floor can beat
  // the current minimum, where w_floor <= k^tau is refreshed as k grows.
  long double w_floor = 1.0L;
  std::int64_t refresh_at = 2;
  for (std::int64_t k = 1; k <= kmax; ++k) {
    y += freq.value;
    if (y >= 1.0L) y -= 1.0L;
    if (k >= refresh_at) {
      w_floor = std::pow(static_cast<long double>(k), static_cast<long double>(tau));
      refresh_at = 2 * k;
    }
    long double d = (y <= 0.5L) ? y : 1.0L - y;
    if (d * w_floor >= best) continue;
    long double margin = d * std::pow(static_cast<long double>(k),
                                      static_cast<long double>(tau));
    if (margin < best) best = margin;
  }
  return static_cast<double>(best);
}

PhaseCheckResult phase_dc_check(double theta, const Frequency& freq,
                                const DiophantineParams& params) {
  if (params.kmax < 0) fail(ErrorCode::ConfigError, "kmax must be non-negative");
  PhaseCheckResult r;
  r.worst_margin = std::numeric_limits<double>::max();
  long double base = frac_ld(2.0L * static_cast<long double>(theta));
  long double fwd = base, bwd = base;
  long double best = std::numeric_limits<long double>::max();
  long double w_floor = 1.0L;
  std::int64_t refresh_at = 1;
  auto weight = [&params](std::int64_t k) {
    return std::pow(static_cast<long double>(k + 1),
                    static_cast<long double>(params.tau));
  };
  auto consider = [&](long double y, std::int64_t k, std::int64_t signed_k) {
    long double d = dist_to_int_ld(y);
    if (d * w_floor >= best) return;
    long double margin = d * weight(k);
    if (margin < best) {
      best = margin;
      r.worst_margin = static_cast<double>(margin);
      r.worst_k = signed_k;
    }
  };
  for (std::int64_t k = 0; k <= params.kmax; ++k) {
    if (k >= refresh_at) {
      w_floor = weight(k);
      refresh_at = 2 * (k + 1);
    }
    consider(fwd, k, k);
    if (k > 0) consider(bwd, k, -k);
    fwd += freq.value; if (fwd >= 1.0L) fwd -= 1.0L;
    bwd -= freq.value; if (bwd < 0.0L) bwd += 1.0L;
  }
  r.member = r.worst_margin > params.gamma; // strict inequality class
  return r;
}

std::int64_t first_return_time(double x, const std::vector<CircleInterval>& target,
                               const Frequency& freq, std::int64_t n_min,
                               OrbitDirection direction, std::int64_t cap) {
  if (n_min < 1 || cap < n_min)
    fail(ErrorCode::ConfigError, "first_return_time needs 1 <= n_min <= cap");
  long double step = (direction == OrbitDirection::Forward)
                         ? freq.value
                         : -freq.value;
  long double y = frac_ld(static_cast<long double>(x) +
                          step * static_cast<long double>(n_min - 1));
  for (std::int64_t n = n_min; n <= cap; ++n) {
    y += step;
    if (y >= 1.0L) y -= 1.0L;
    if (y < 0.0L) y += 1.0L;
    double yd = static_cast<double>(y);
    for (const auto& iv : target)
      if (iv.contains(yd)) return n;
  }
  fail(ErrorCode::CapExceeded, "no orbit return up to cap");
}

PhaseClassWindow phase_set_measure(const DiophantineParams& params,
                                   const Frequency& freq, double lo, double hi) {
  if (!(hi > lo)) fail(ErrorCode::ConfigError, "phase window must be non-empty");
  if (hi - lo > 1.0 + 1e-12) fail(ErrorCode::ConfigError, "phase window wider than the circle");
  if (!(params.tau > 1.0)) fail(ErrorCode::ConfigError, "phase class needs tau > 1");
  PhaseClassWindow w;
  w.lo = lo;
  w.hi = hi;

  std::vector<std::pair<double, double>> raw;
  auto push_clipped = [&](double a, double b) {
    double lo_c = std::max(a, lo), hi_c = std::min(b, hi);
    if (hi_c > lo_c) raw.emplace_back(lo_c, hi_c);
  };

  for (std::int64_t k = -params.kmax; k <= params.kmax; ++k) {
    double rho = params.gamma *
        std::exp(-params.tau * std::log(static_cast<double>(std::llabs(k) + 1)));
    if (rho <= 0.0) continue; // weight underflowed: nothing excluded at this k
    // dist(2t + k a, Z) < rho  <=>  t in two arcs of width rho, centered at
    // -k a / 2 and -k a / 2 + 1/2 (mod 1).
    double c0 = static_cast<double>(frac_ld(-static_cast<long double>(k) * freq.value)) / 2.0;
    for (int half = 0; half < 2; ++half) {
      double c = c0 + 0.5 * half;
      // replicate across the wrap so any window inside [-1, 2] is covered
      for (int shift = -1; shift <= 2; ++shift)
        push_clipped(c - rho / 2 + shift, c + rho / 2 + shift);
    }
  }

  std::sort(raw.begin(), raw.end());
  double total = 0.0;
  for (const auto& [a, b] : raw) {
    if (!w.excluded.empty() && a <= w.excluded.back().second) {
      if (b > w.excluded.back().second) {
        total += b - w.excluded.back().second;
        w.excluded.back().second = b;
      }
    } else {
      w.excluded.emplace_back(a, b);
      total += b - a;
    }
  }
  w.excluded_measure = total;
  // |k| > kmax: signs together exclude at most 4 gamma (k+1)^-tau per k.
  w.tail_allowance = 4.0 * params.gamma / ((params.tau - 1.0) *
      std::pow(static_cast<double>(params.kmax + 1), params.tau - 1.0));
  return w;
}

} // namespace qpl
