// =============================================================================
// Multiscale induction: critical intervals, return times, per-scale estimates
// =============================================================================

#include <doctest.h>

#include <cmath>
#include <vector>

#include "qpl/induction.hpp"

using namespace qpl;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Resonance-tuned options: base denominator 5, tight radius exponent. With
// these, the two critical intervals of the tuned energy below are exchanged
// by 17 steps of the rotation, so r_1 = r_2 = r_3 = 17.
InductionOptions tuned_options() {
  InductionOptions opt;
  opt.tau = 1.06;
  opt.n_base = 3; // golden convergents q = 1, 2, 3, 5, ...
  return opt;
}

// Energy whose scale-one critical points satisfy c_2 - c_1 = frac(17 alpha):
// t = v(c_1) with c_1 = (1 - frac(17 alpha)) / 2 for the AMO potential.
double tuned_energy(const Frequency& freq) {
  long double f = 17.0L * freq.value;
  f -= std::floor(f);
  return 2.0 * std::cos(kPi * (1.0 - static_cast<double>(f)));
}

} // namespace

// ---- scale one --------------------------------------------------------------

TEST_CASE("scale-one critical points solve v(c) = t, one per branch") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();

  // 2 cos(2 pi c) = 0 at c = 1/4, 3/4.
  ScaleState mid = initialize_scale_one(v, 0.0, 10.0, freq, opt);
  CHECK(std::fabs(mid.c[0] - 0.25) <= 1e-12);
  CHECK(std::fabs(mid.c[1] - 0.75) <= 1e-12);

  // 2 cos(2 pi c) = 1 at c = 1/6, 5/6.
  ScaleState third = initialize_scale_one(v, 1.0, 10.0, freq, opt);
  CHECK(std::fabs(third.c[0] - 1.0 / 6.0) <= 1e-10);
  CHECK(std::fabs(third.c[1] - 5.0 / 6.0) <= 1e-10);

  // Phase symmetry of the pair: c_1 = -c_2 mod 1.
  CHECK(dist_to_integers(mid.c[0] + mid.c[1]) <= 1e-10);
  CHECK(dist_to_integers(third.c[0] + third.c[1]) <= 1e-10);

  // Seed bookkeeping.
  CHECK(mid.i == 1);
  CHECK(mid.depth == 0);
  CHECK(mid.q_scale == 5);
  CHECK(mid.q_seed == 3);
  double want_radius = 1.0 / (2.0 * std::pow(5.0, 2.0 * opt.tau));
  CHECK(std::fabs(mid.radius - want_radius) <= 1e-17);

  // Stored samples are the closed-form seed g_1 = arctan(t - v).
  for (int j = 0; j < 2; ++j) {
    REQUIRE(mid.sample_x[j].size() == 257);
    for (std::size_t k = 0; k < mid.sample_x[j].size(); k += 16)
      CHECK(std::fabs(mid.sample_g[j][k] - std::atan(0.0 - v(mid.sample_x[j][k]))) <=
            1e-15);
  }
}

TEST_CASE("scale one rejects energies without a two-branch level set") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();
  CHECK_THROWS_AS((void)initialize_scale_one(v, 2.0, 10.0, freq, opt), Error);
  CHECK_THROWS_AS((void)initialize_scale_one(v, -2.5, 10.0, freq, opt), Error);
  try {
    (void)initialize_scale_one(v, 3.0, 10.0, freq, opt);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoBracketing);
  }
}

TEST_CASE("scale one validates configuration") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();

  InductionOptions bad_tau = opt;
  bad_tau.tau = 1.0;
  try {
    (void)initialize_scale_one(v, 0.0, 10.0, freq, bad_tau);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }

  InductionOptions bad_base = opt;
  bad_base.n_base = 0;
  CHECK_THROWS_AS((void)initialize_scale_one(v, 0.0, 10.0, freq, bad_base), Error);
  CHECK_THROWS_AS((void)initialize_scale_one(v, 0.0, 0.0, freq, opt), Error);
  CHECK_THROWS_AS((void)initialize_scale_one(v, 0.0, -2.0, freq, opt), Error);
}

TEST_CASE("default base scale picks the first denominator of at least 20") {
  Frequency freq = Frequency::golden();
  CHECK(default_scale_base(freq) == 6); // q = 21
  CHECK(default_scale_base(freq, 5) == 3);
  CHECK(freq.q[6] == 21);
}

// ---- the tuned resonance chain ----------------------------------------------

TEST_CASE("tuned chain realizes the 17-step exchange at three scales") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();
  const double t = tuned_energy(freq);
  CHECK(std::fabs(t - 0.041326649821088038) <= 1e-15);

  ScaleState s1 = initialize_scale_one(v, t, 10.0, freq, opt);
  // Closed form for the seed critical point.
  CHECK(std::fabs(s1.c[0] - std::acos(t / 2.0) / (2.0 * kPi)) <= 1e-12);

  ScaleState s2 = advance_scale(s1, v, freq);
  ScaleState s3 = advance_scale(s2, v, freq);
  ScaleState s4 = advance_scale(s3, v, freq);

  CHECK(s1.r == 17);
  CHECK(s2.r == 17);
  CHECK(s3.r == 17);
  CHECK(s4.r == 1614);
  CHECK(s1.r_plus == 17);
  CHECK(s1.r_minus == 17);
  CHECK(s2.depth == 17);
  CHECK(s3.depth == 17);
  CHECK(s4.depth == 17);

  // Frozen minimizer locations (deterministic pipeline).
  CHECK(std::fabs(s2.c[0] - 0.24664813903830646) <= 1e-12);
  CHECK(std::fabs(s3.c[0] - 0.24664813903795213) <= 1e-12);
  CHECK(std::fabs(s4.c[0] - 0.24664813903769894) <= 1e-12);

  const ScaleState* chain[4] = {&s1, &s2, &s3, &s4};
  for (const ScaleState* s : chain) {
    // Radius has the closed form 1 / (2^i q_{N+i-1}^{2 tau}).
    double want = 1.0 / (std::ldexp(1.0, s->i) *
                         std::pow(static_cast<double>(s->q_scale), 2.0 * opt.tau));
    CHECK(std::fabs(s->radius - want) <= 1e-18 + 1e-15 * want);
    // Return times respect the floor q_{N+i-1} pointwise.
    CHECK(s->r >= s->q_scale);
    for (std::size_t k = 0; k < s->ret_x.size(); ++k) {
      CHECK(s->ret_fwd[k] >= s->q_scale);
      CHECK(s->ret_bwd[k] >= s->q_scale);
    }
    // Phase symmetry at every scale.
    CHECK(dist_to_integers(s->c[0] + s->c[1]) <= 1e-12);
  }
  CHECK(s1.q_scale == 5);
  CHECK(s2.q_scale == 8);
  CHECK(s3.q_scale == 13);
  CHECK(s4.q_scale == 21);

  // Exact radius recurrence between consecutive scales.
  for (int k = 0; k + 1 < 4; ++k) {
    double ratio = 2.0 * std::pow(static_cast<double>(chain[k + 1]->q_scale) /
                                      static_cast<double>(chain[k]->q_scale),
                                  2.0 * opt.tau);
    CHECK(std::fabs(chain[k + 1]->radius - chain[k]->radius / ratio) <=
          1e-15 * chain[k]->radius);
  }

  // Containment: each new critical point stays in its parent interval.
  for (int k = 0; k + 1 < 4; ++k)
    for (int j = 0; j < 2; ++j)
      CHECK(circle_dist(chain[k + 1]->c[j], chain[k]->c[j]) <= chain[k]->radius);

  // Forward return at the stored time really lands back in the union.
  for (std::size_t k = 0; k < s1.ret_x.size(); k += 7) {
    long double y = s1.ret_x[k] + static_cast<long double>(s1.ret_fwd[k]) * freq.value;
    double yw = static_cast<double>(y - std::floor(y));
    bool inside = s1.interval(0).contains(yw) || s1.interval(1).contains(yw);
    CHECK(inside);
  }

  // The stored critical value is the sample minimum of |g_i|.
  double min_samp = 1e300;
  for (double g : s2.sample_g[0]) min_samp = std::fmin(min_samp, std::fabs(g));
  CHECK(std::fabs(scale_gap_value(s2, v, freq, s2.c[0])) <= min_samp + 1e-15);

  // Determinism: rebuilding the chain reproduces every field bitwise.
  ScaleState t1 = initialize_scale_one(v, t, 10.0, freq, opt);
  ScaleState t2 = advance_scale(t1, v, freq);
  CHECK(t2.c[0] == s2.c[0]);
  CHECK(t2.c[1] == s2.c[1]);
  CHECK(t2.r == s2.r);
  REQUIRE(t2.sample_g[0].size() == s2.sample_g[0].size());
  for (std::size_t k = 0; k < t2.sample_g[0].size(); ++k)
    CHECK(t2.sample_g[0][k] == s2.sample_g[0][k]);
}

TEST_CASE("tuned chain estimate report") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();
  const double t = tuned_energy(freq);

  ScaleState s1 = initialize_scale_one(v, t, 10.0, freq, opt);
  ScaleState s2 = advance_scale(s1, v, freq);
  ScaleState s3 = advance_scale(s2, v, freq);

  EstimateReport r12 = verify_scale_estimates(s1, s2);
  EstimateReport r23 = verify_scale_estimates(s2, s3);

  // Transition 1 -> 2 references the seed depth convention q_{N-1} = 3.
  CHECK(r12.r_ref == 3);
  CHECK(r23.r_ref == 17);

  // (1) contraction: frozen drift 6.2957e-5, far under the budget.
  CHECK(std::fabs(r12.contraction[0] - 6.2956587587370549e-05) <= 1e-12);
  CHECK(std::fabs(r12.contraction[0] - r12.contraction[1]) <= 1e-14);
  CHECK(r12.contraction_fit <= 0.01);
  CHECK(r12.contraction_ok);
  // Also under the steeper reference decay lambda^(-3/4 r).
  CHECK(r12.contraction[0] < std::pow(10.0, -0.75 * 3.0));
  CHECK(r23.contraction[0] <= 1e-12);
  CHECK(r23.contraction_ok);

  // (2) growth ratios hover at the Lyapunov value ~ ln lambda.
  CHECK(std::fabs(r12.min_growth_ratio - 0.9929056357815027) <= 1e-9);
  CHECK(std::fabs(r23.min_growth_ratio - 1.0079605233773041) <= 1e-9);
  CHECK(r12.growth_ok);
  CHECK(r23.growth_ok);

  // (3) transversality: |g| is linear near its zero, so the cubic-normalized
  // floor is large and positive.
  CHECK(r12.cubic_constant > 1e5);
  CHECK(r23.cubic_constant > 1e6);
  CHECK(r12.cubic_ok);
  CHECK(r23.cubic_ok);

  // (4) the seed pair mixes conventions and is reported, not gated; the
  // like-convention pair at equal depth agrees identically.
  CHECK_FALSE(r12.gap_comparable);
  CHECK(r12.sup_gap > 1e-3);
  CHECK(r12.sup_gap < 1e-2);
  CHECK(r23.gap_comparable);
  CHECK(r23.sup_gap == 0.0);
  CHECK(r23.gap_ok);

  // Evenness residuals vanish and sit far below 10 lambda^(-r/2).
  CHECK(r12.evenness_next <= 1e-12);
  CHECK(r23.evenness_next <= 1e-12);
  CHECK(std::fabs(r23.evenness_bound - 10.0 * std::pow(10.0, -8.5)) <=
        1e-15 * r23.evenness_bound);
  CHECK(r12.evenness_ok);
  CHECK(r23.evenness_ok);

  // Independent long-double product norm at one return-grid point.
  {
    const double x = s1.ret_x[0];
    const long long r = s1.ret_fwd[0];
    long double a = 1.0L, b = 0.0L, c = 0.0L, d = 1.0L;
    long double ph = x;
    for (long long n = 0; n < r; ++n) {
      long double w = 10.0L * (static_cast<long double>(t) -
                               2.0L * std::cos(2.0L * 3.14159265358979323846264L * ph));
      long double na = w * a - c, nb = w * b - d;
      c = a;
      d = b;
      a = na;
      b = nb;
      ph += freq.value;
      ph -= std::floor(ph);
    }
    long double fr = a * a + b * b + c * c + d * d;
    long double det = a * d - b * c;
    long double disc = std::sqrt(fr * fr - 4.0L * det * det);
    double want = static_cast<double>(0.5L * std::log(0.5L * (fr + disc)));
    CHECK(std::fabs(s1.ret_log_fwd[0] - want) <= 1e-10 * std::fabs(want));
  }
}

TEST_CASE("separation check flags the tuned resonance at scale one only") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();
  const double t = tuned_energy(freq);

  ScaleState s1 = initialize_scale_one(v, t, 10.0, freq, opt);
  ScaleState s2 = advance_scale(s1, v, freq);
  ScaleState s3 = advance_scale(s2, v, freq);

  // c_1 - c_2 = -frac(17 alpha), so k = 4 leaves the margin dist(21 alpha, Z),
  // under the scale-one threshold 5^(-2 tau) but over the later thresholds.
  SeparationResult sep1 = separation_check(s1, freq);
  CHECK_FALSE(sep1.ok);
  CHECK(sep1.worst_k == 4);
  long double m21 = 21.0L * freq.value;
  double dist21 = static_cast<double>(std::fabs(m21 - std::floor(m21 + 0.5L)));
  CHECK(std::fabs(sep1.worst_margin - dist21) <= 1e-12);
  CHECK(std::fabs(sep1.threshold - std::pow(5.0, -2.12)) <= 1e-15);

  SeparationResult sep2 = separation_check(s2, freq);
  SeparationResult sep3 = separation_check(s3, freq);
  CHECK(sep2.ok);
  CHECK(sep3.ok);
  CHECK(sep2.threshold == doctest::Approx(std::pow(8.0, -2.12)).epsilon(1e-12));
}

// ---- generic energies ---------------------------------------------------------

TEST_CASE("critical points decrease in t and respect AMO antisymmetry") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();

  double prev_c = 1.0;
  for (double t : {-1.5, -0.9, -0.3, 0.3, 0.9, 1.5}) {
    ScaleState s1 = initialize_scale_one(v, t, 10.0, freq, opt);
    ScaleState s3 = advance_scale(advance_scale(s1, v, freq), v, freq);
    // v = 2 cos is decreasing on the first branch: c(t) decreases.
    CHECK(s3.c[0] < prev_c);
    prev_c = s3.c[0];
    // v(x + 1/2) = -v(x) maps the chain at t to the chain at -t.
    ScaleState m1 = initialize_scale_one(v, -t, 10.0, freq, opt);
    ScaleState m3 = advance_scale(advance_scale(m1, v, freq), v, freq);
    CHECK(std::fabs((0.5 - m3.c[0]) - s3.c[0]) <= 1e-9);
    // Evenness residual decays (within measurement noise) along each chain.
    double e1 = dist_to_integers(s1.c[0] + s1.c[1]);
    double e3 = dist_to_integers(s3.c[0] + s3.c[1]);
    CHECK(e3 <= e1 + 1e-10);
  }
}

TEST_CASE("perturbed even potential runs the same induction") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::harmonics({2.0, 0.3});
  InductionOptions opt = tuned_options();

  ScaleState s1 = initialize_scale_one(v, 0.1, 10.0, freq, opt);
  ScaleState s2 = advance_scale(s1, v, freq);
  ScaleState s3 = advance_scale(s2, v, freq);
  CHECK(dist_to_integers(s3.c[0] + s3.c[1]) <= 1e-10);
  CHECK(circle_dist(s2.c[0], s1.c[0]) <= s1.radius);
  CHECK(circle_dist(s3.c[0], s2.c[0]) <= s2.radius);
  EstimateReport rep = verify_scale_estimates(s2, s3);
  CHECK(rep.cubic_ok);
  CHECK(rep.growth_ok);
  // v' vanishes only at the two extremals, so the level set is two points.
  CHECK(std::fabs(v(s1.c[0]) - 0.1) <= 1e-12);
  CHECK(std::fabs(v(s1.c[1]) - 0.1) <= 1e-12);
}

// ---- failure modes -----------------------------------------------------------

TEST_CASE("displaced interval loses the critical point") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();
  ScaleState s1 = initialize_scale_one(v, tuned_energy(freq), 10.0, freq, opt);
  s1.c[0] = wrap_unit(s1.c[0] + 5.0 * s1.radius);
  s1.c[1] = wrap_unit(s1.c[1] - 5.0 * s1.radius);
  try {
    (void)advance_scale(s1, v, freq);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LostCriticalPoint);
  }
}

TEST_CASE("return search honors its cap") {
  Frequency freq = Frequency::golden();
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();
  opt.return_cap = 10; // below the 17-step exchange
  try {
    (void)initialize_scale_one(v, tuned_energy(freq), 10.0, freq, opt);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CapExceeded);
  }
}

TEST_CASE("advancing past the convergent table is a configuration error") {
  Frequency freq = Frequency::golden(5);
  Potential v = Potential::amo();
  InductionOptions opt = tuned_options();
  ScaleState s1 = initialize_scale_one(v, tuned_energy(freq), 10.0, freq, opt);
  ScaleState s2 = advance_scale(s1, v, freq);
  try {
    (void)advance_scale(s2, v, freq);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}
