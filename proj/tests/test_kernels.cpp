// =============================================================================
// Scaled matrices, closed-form polar data, cocycle kernels, SIMD equivalence
// =============================================================================

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "qpl/kernel.hpp"
#include "qpl/scaled_matrix.hpp"

using namespace qpl;

namespace {

constexpr double kPi = 3.14159265358979323846;

Mat2 rotation(double t) {
  return {std::cos(t), -std::sin(t), std::sin(t), std::cos(t)};
}

// Entrywise comparison after aligning the power-of-two scales.
void check_same_matrix(const ScaledMatrix& l, const ScaledMatrix& r, double tol) {
  REQUIRE(std::llabs(l.exp2 - r.exp2) < 64);
  double shift = std::ldexp(1.0, static_cast<int>(r.exp2 - l.exp2));
  CHECK(l.core.a == doctest::Approx(r.core.a * shift).epsilon(tol).scale(1.0));
  CHECK(l.core.b == doctest::Approx(r.core.b * shift).epsilon(tol).scale(1.0));
  CHECK(l.core.c == doctest::Approx(r.core.c * shift).epsilon(tol).scale(1.0));
  CHECK(l.core.d == doctest::Approx(r.core.d * shift).epsilon(tol).scale(1.0));
}

// Independent long double product with per-step max normalization; the
// potential is evaluated with the libm cosine.
struct BruteResult {
  long double a, b, c, d; // max |entry| = 1
  long double log_norm;   // log of the running normalization
};

BruteResult brute_force_product(const std::vector<double>& coeffs, double mean,
                                double lambda, double energy, double alpha,
                                double x, std::int64_t n, bool forward) {
  const long double two_pi = 6.283185307179586476925286766559L;
  long double a = 1.0L, b = 0.0L, c = 0.0L, d = 1.0L, logn = 0.0L;
  long double y = x;
  for (std::int64_t k = 1; k <= n; ++k) {
    if (!forward) {
      y -= alpha;
      if (y < 0.0L) y += 1.0L;
    }
    long double v = mean;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
      v += static_cast<long double>(coeffs[j]) *
           std::cos(two_pi * static_cast<long double>(j + 1) * y);
    long double w = energy - static_cast<long double>(lambda) * v;
    if (forward) {
      long double na = w * a - c, nb = w * b - d;
      c = a; d = b; a = na; b = nb;
      y += alpha;
      if (y >= 1.0L) y -= 1.0L;
    } else {
      long double nc = w * c - a, nd = w * d - b;
      a = c; b = d; c = nc; d = nd;
    }
    long double m = std::fmax(std::fmax(std::fabs(a), std::fabs(b)),
                              std::fmax(std::fabs(c), std::fabs(d)));
    a /= m; b /= m; c /= m; d /= m;
    logn += std::log(m);
  }
  return {a, b, c, d, logn};
}

} // namespace

// =============================================================================
// ScaledMatrix basics
// =============================================================================

TEST_CASE("renormalize moves the max entry into [1,2) exactly") {
  ScaledMatrix m{{1024.0, 0.0, 0.0, 0.5}, 0};
  m.renormalize();
  CHECK(m.exp2 == 10);
  CHECK(m.core.a == 1.0);
  CHECK(m.core.d == 0.00048828125); // exact: 0.5 / 1024
  ScaledMatrix t{{0.125, 0.0, 0.0, 0.0625}, 3};
  t.renormalize();
  CHECK(t.exp2 == 0);
  CHECK(t.core.a == 1.0);
}

TEST_CASE("scaled products never overflow the double range") {
  ScaledMatrix m1{{1.5, 0.0, 0.0, 1.0}, 600};
  ScaledMatrix m2{{1.2, 0.0, 0.0, 1.0}, 700};
  ScaledMatrix p = m1 * m2;
  CHECK(p.exp2 == 1300);
  CHECK(p.core.a == doctest::Approx(1.8));
  CHECK(p.log_max_abs() == doctest::Approx(1300.0 * std::log(2.0) + std::log(1.8)));
}

TEST_CASE("unit-determinant inverse is the adjugate at the same scale") {
  ScaledMatrix m{{2.0, 1.0, 3.0, 2.0}, 0}; // det = 1
  ScaledMatrix p = m * m.unit_det_inverse();
  CHECK(p.core.a * std::ldexp(1.0, static_cast<int>(p.exp2)) == doctest::Approx(1.0));
  CHECK(p.core.b == doctest::Approx(0.0).scale(1.0));
  CHECK(p.core.c == doctest::Approx(0.0).scale(1.0));
}

// =============================================================================
// Polar data
// =============================================================================

TEST_CASE("polar data of a rotated stretch recovers angles and stretch") {
  const double phi1 = 0.3, phi2 = 0.8, sigma = 3.0;
  Mat2 m = rotation(phi1) * Mat2{sigma, 0.0, 0.0, 1.0 / sigma} * rotation(phi2);
  PolarData p = polar_decompose(ScaledMatrix{m, 0});
  CHECK(p.log_sigma_plus == doctest::Approx(std::log(sigma)).epsilon(1e-12));
  CHECK(p.log_sigma_minus == doctest::Approx(-std::log(sigma)).epsilon(1e-12));
  // Most expanded output direction: R(phi1) e1. Most contracted input:
  // R(phi2)^T e2, at angle pi/2 - phi2.
  CHECK(p.u_angle == doctest::Approx(phi1).epsilon(1e-12));
  CHECK(p.s_angle == doctest::Approx(kPi / 2.0 - phi2).epsilon(1e-12));
}

TEST_CASE("applying the matrix to its contracted direction yields sigma minus") {
  Mat2 m = rotation(1.1) * Mat2{7.5, 0.0, 0.0, 1.0 / 7.5} * rotation(-0.4);
  ScaledMatrix sm{m, 0};
  PolarData p = polar_decompose(sm);
  Vec2 s = direction_vector(p.s_angle);
  Vec2 out = sm.core * s;
  double norm = std::hypot(out.x, out.y);
  CHECK(std::log(norm) == doctest::Approx(p.log_sigma_minus).epsilon(1e-10));
  // The expanded input direction (orthogonal to s) maps onto u with sigma plus.
  Vec2 v1 = direction_vector(p.s_angle + kPi / 2.0);
  Vec2 big = sm.core * v1;
  CHECK(std::log(std::hypot(big.x, big.y)) ==
        doctest::Approx(p.log_sigma_plus).epsilon(1e-10));
  double big_angle = wrap_angle_half(std::atan2(big.y, big.x));
  CHECK(std::fabs(angle_gap(big_angle, p.u_angle)) < 1e-10);
}

TEST_CASE("rotations have no preferred directions and throw") {
  CHECK_THROWS_AS((void)polar_decompose(ScaledMatrix{rotation(0.7), 0}), Error);
  try {
    (void)polar_decompose(ScaledMatrix{rotation(0.7), 0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateNorm);
  }
}

TEST_CASE("rank-one matrices report a vanishing small singular value") {
  PolarData p = polar_decompose(ScaledMatrix{{1.0, 0.0, 0.0, 0.0}, 0});
  CHECK(p.log_sigma_minus == -std::numeric_limits<double>::infinity());
  CHECK(p.s_angle == doctest::Approx(kPi / 2.0));
  CHECK(p.u_angle == doctest::Approx(0.0));
}

TEST_CASE("angle gap is the signed projective distance") {
  CHECK(angle_gap(0.1, 0.3) == doctest::Approx(0.2));
  CHECK(angle_gap(0.3, 0.1) == doctest::Approx(-0.2));
  CHECK(angle_gap(0.1, 0.1 + kPi) == doctest::Approx(0.0).scale(1.0));
  CHECK(angle_gap(0.05, kPi - 0.05) == doctest::Approx(-0.1));
  CHECK(wrap_angle_half(kPi + 0.2) == doctest::Approx(0.2));
  CHECK(wrap_angle_half(-0.2) == doctest::Approx(kPi - 0.2));
}

// =============================================================================
// Polynomial cosine
// =============================================================================

TEST_CASE("polynomial cosine is exact at quarter-period points") {
  CHECK(poly_cos2pi(0.0) == 1.0);
  CHECK(poly_cos2pi(0.5) == -1.0);
  CHECK(std::fabs(poly_cos2pi(0.25)) == 0.0);
  CHECK(std::fabs(poly_cos2pi(0.75)) == 0.0);
  CHECK(poly_cos2pi(0.125) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-16));
}

TEST_CASE("polynomial cosine agrees with libm within 1e-15") {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double y = uni(rng);
    double diff = std::fabs(poly_cos2pi(y) - std::cos(2.0 * kPi * y));
    worst = std::fmax(worst, diff);
  }
  CHECK(worst < 1e-15);
}

TEST_CASE("polynomial cosine is exactly even") {
  for (double y : {0.05, 0.3, 0.45, 0.6, 0.95})
    CHECK(poly_cos2pi(-y) == poly_cos2pi(y));
}

// =============================================================================
// Kernel semantics
// =============================================================================

TEST_CASE("one forward step reproduces the closed-form transfer matrix") {
  Potential v = Potential::amo();
  const double lambda = 3.0, energy = 0.7, alpha = 0.61803398874989485, x = 0.2;
  CocycleRequest req{lambda, alpha, OrbitDirection::Forward, {1}};
  ScaledMatrix got = run_cocycle(v, req, {x, energy})[0];
  double w = energy - lambda * 2.0 * std::cos(2.0 * kPi * x);
  ScaledMatrix want{{w, -1.0, 1.0, 0.0}, 0};
  want.renormalize();
  check_same_matrix(got, want, 1e-13);
}

TEST_CASE("one backward step reproduces the inverse one-step matrix") {
  Potential v = Potential::amo();
  const double lambda = 3.0, energy = 0.7, alpha = 0.61803398874989485, x = 0.2;
  CocycleRequest req{lambda, alpha, OrbitDirection::Backward, {1}};
  ScaledMatrix got = run_cocycle(v, req, {x, energy})[0];
  double w = energy - lambda * 2.0 * std::cos(2.0 * kPi * wrap_unit(x - alpha));
  ScaledMatrix want{{0.0, 1.0, -1.0, w}, 0};
  want.renormalize();
  check_same_matrix(got, want, 1e-13);
}

TEST_CASE("kernel products match a long double reference in both directions") {
  std::vector<double> coeffs = {1.0, 0.3};
  Potential v = Potential::harmonics(coeffs);
  const double lambda = 1.5, energy = 0.2, alpha = 0.61803398874989485, x = 0.123;
  for (bool forward : {true, false}) {
    CocycleRequest req{lambda, alpha,
                       forward ? OrbitDirection::Forward : OrbitDirection::Backward,
                       {40}};
    ScaledMatrix got = run_cocycle(v, req, {x, energy})[0];
    BruteResult want = brute_force_product(coeffs, 0.0, lambda, energy, alpha, x,
                                           40, forward);
    CHECK(got.log_max_abs() ==
          doctest::Approx(static_cast<double>(want.log_norm)).epsilon(1e-12));
    double scale = 1.0 / got.core.max_abs();
    CHECK(got.core.a * scale == doctest::Approx(static_cast<double>(want.a)).epsilon(1e-10).scale(1.0));
    CHECK(got.core.b * scale == doctest::Approx(static_cast<double>(want.b)).epsilon(1e-10).scale(1.0));
    CHECK(got.core.c * scale == doctest::Approx(static_cast<double>(want.c)).epsilon(1e-10).scale(1.0));
    CHECK(got.core.d * scale == doctest::Approx(static_cast<double>(want.d)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("snapshots share their prefix: split runs agree bit for bit") {
  Potential v = Potential::amo();
  CocycleRequest both{10.0, 0.61803398874989485, OrbitDirection::Forward, {10, 20}};
  CocycleRequest ten = both, twenty = both;
  ten.steps = {10};
  twenty.steps = {20};
  CocycleLane lane{0.37, 1.1};
  auto combined = run_cocycle(v, both, lane);
  auto only10 = run_cocycle(v, ten, lane)[0];
  auto only20 = run_cocycle(v, twenty, lane)[0];
  CHECK(combined[0].core.a == only10.core.a);
  CHECK(combined[0].core.d == only10.core.d);
  CHECK(combined[0].exp2 == only10.exp2);
  // The mid-run snapshot renormalization is an exact power-of-two rescale,
  // so the deeper snapshot is unaffected.
  CHECK(combined[1].core.a == only20.core.a);
  CHECK(combined[1].core.b == only20.core.b);
  CHECK(combined[1].core.c == only20.core.c);
  CHECK(combined[1].core.d == only20.core.d);
  CHECK(combined[1].exp2 == only20.exp2);
}

TEST_CASE("cocycle composition holds within round-off") {
  Potential v = Potential::amo();
  const double lambda = 2.0, energy = 0.4, alpha = 0.41421356237309503, x = 0.05;
  const std::int64_t n = 30, m = 17;
  CocycleRequest full{lambda, alpha, OrbitDirection::Forward, {n + m}};
  CocycleRequest head{lambda, alpha, OrbitDirection::Forward, {m}};
  CocycleRequest tail{lambda, alpha, OrbitDirection::Forward, {n}};
  ScaledMatrix lhs = run_cocycle(v, full, {x, energy})[0];
  ScaledMatrix am = run_cocycle(v, head, {x, energy})[0];
  ScaledMatrix an = run_cocycle(
      v, tail, {wrap_unit(x + static_cast<double>(m) * alpha), energy})[0];
  check_same_matrix(lhs, an * am, 1e-9);
}

TEST_CASE("backward products invert the forward product at the shifted phase") {
  Potential v = Potential::amo();
  const double lambda = 2.0, energy = 0.4, alpha = 0.61803398874989485, x = 0.3;
  const std::int64_t n = 25;
  CocycleRequest back{lambda, alpha, OrbitDirection::Backward, {n}};
  CocycleRequest fwd{lambda, alpha, OrbitDirection::Forward, {n}};
  ScaledMatrix lhs = run_cocycle(v, back, {x, energy})[0];
  ScaledMatrix rhs = run_cocycle(
      v, fwd, {wrap_unit(x - static_cast<double>(n) * alpha), energy})[0];
  check_same_matrix(lhs, rhs.unit_det_inverse(), 1e-9);
}

TEST_CASE("products keep unit determinant in scaled form") {
  Potential v = Potential::amo();
  // Shallow product: det(2^exp2 core) = 1, so det(core) = 2^(-2 exp2) is
  // still visible above the O(eps) cancellation noise of ad - bc.
  CocycleRequest shallow{2.0, 0.61803398874989485, OrbitDirection::Forward, {16}};
  ScaledMatrix m = run_cocycle(v, shallow, {0.123, 0.4})[0];
  REQUIRE(m.exp2 > 4);
  CHECK(m.core.det() == doctest::Approx(std::ldexp(1.0, -2 * static_cast<int>(m.exp2)))
                            .epsilon(1e-3));
  // Deep product: the true det(core) is far below one ulp of the O(1)
  // entries; the computed value must be nothing but cancellation noise.
  CocycleRequest deep{10.0, 0.61803398874989485, OrbitDirection::Forward, {60}};
  ScaledMatrix dm = run_cocycle(v, deep, {0.123, 0.5})[0];
  CHECK(std::fabs(dm.core.det()) < 1e-12);
}

TEST_CASE("contracted direction of a moderate product measures sigma minus") {
  Potential v = Potential::amo();
  CocycleRequest req{2.0, 0.61803398874989485, OrbitDirection::Forward, {8}};
  ScaledMatrix m = run_cocycle(v, req, {0.41, 0.3})[0];
  PolarData p = polar_decompose(m);
  Vec2 out = m.core * direction_vector(p.s_angle);
  double log_small = m.log_scale() + std::log(std::hypot(out.x, out.y));
  CHECK(log_small == doctest::Approx(p.log_sigma_minus).epsilon(1e-8));
  // Unit determinant: the two log singular values cancel.
  CHECK(p.log_sigma_plus + p.log_sigma_minus == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("invalid kernel requests are rejected") {
  Potential v = Potential::amo();
  CocycleRequest req{1.0, 0.5, OrbitDirection::Forward, {}};
  CHECK_THROWS_AS((void)run_cocycle(v, req, {0.0, 0.0}), Error);
  req.steps = {5, 5};
  CHECK_THROWS_AS((void)run_cocycle(v, req, {0.0, 0.0}), Error);
  req.steps = {0};
  CHECK_THROWS_AS((void)run_cocycle(v, req, {0.0, 0.0}), Error);
  req.steps = {1};
  CHECK_THROWS_AS(
      (void)run_cocycle_batch(v, req, std::vector<CocycleLane>{}, KernelBackend::Scalar),
      Error);
}

// =============================================================================
// Backend equivalence
// =============================================================================

TEST_CASE("scalar and AVX2 backends agree bit for bit") {
  if (!kernel_backend_available(KernelBackend::Avx2)) {
    MESSAGE("AVX2 not available on this machine; skipping");
    return;
  }
  std::mt19937_64 rng(991);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (const auto& coeffs : std::vector<std::vector<double>>{{2.0}, {1.0, -0.2, 0.07}}) {
    Potential v = Potential::harmonics(coeffs);
    for (OrbitDirection dir : {OrbitDirection::Forward, OrbitDirection::Backward}) {
      CocycleRequest req{10.0, 0.61803398874989485, dir, {1, 5, 16, 17, 100, 1000}};
      std::vector<CocycleLane> lanes;
      for (int i = 0; i < 7; ++i) lanes.push_back({uni(rng), 4.0 * uni(rng) - 2.0});
      auto simd = run_cocycle_batch(v, req, lanes, KernelBackend::Avx2);
      auto ref = run_cocycle_batch(v, req, lanes, KernelBackend::Scalar);
      for (std::size_t l = 0; l < lanes.size(); ++l) {
        for (std::size_t j = 0; j < req.steps.size(); ++j) {
          CHECK(simd[l][j].core.a == ref[l][j].core.a);
          CHECK(simd[l][j].core.b == ref[l][j].core.b);
          CHECK(simd[l][j].core.c == ref[l][j].core.c);
          CHECK(simd[l][j].core.d == ref[l][j].core.d);
          CHECK(simd[l][j].exp2 == ref[l][j].exp2);
        }
      }
    }
  }
}

TEST_CASE("backend plumbing reports names and availability") {
  CHECK(kernel_backend_available(KernelBackend::Scalar));
  CHECK(std::string(kernel_backend_name(KernelBackend::Scalar)) == "scalar");
  CHECK(std::string(kernel_backend_name(KernelBackend::Avx2)) == "avx2");
  KernelBackend active = active_kernel_backend();
  CHECK(kernel_backend_available(active));
}
