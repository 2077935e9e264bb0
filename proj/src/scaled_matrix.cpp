#include "qpl/scaled_matrix.hpp"

#include <cmath>
#include <limits>

namespace qpl {

namespace {

constexpr double kLn2 = 0.69314718055994530941723212145818;
constexpr double kPi = 3.14159265358979323846264338327950;

} // namespace

double Mat2::max_abs() const {
  return std::fmax(std::fmax(std::fabs(a), std::fabs(b)),
                   std::fmax(std::fabs(c), std::fabs(d)));
}

void ScaledMatrix::renormalize() {
  double m = core.max_abs();
  if (m == 0.0) fail(ErrorCode::Overflow, "scaled matrix collapsed to zero");
  if (!std::isfinite(m)) fail(ErrorCode::Overflow, "scaled matrix entry not finite");
  int e = std::ilogb(m);
  if (e == 0) return;
  core.a = std::ldexp(core.a, -e);
  core.b = std::ldexp(core.b, -e);
  core.c = std::ldexp(core.c, -e);
  core.d = std::ldexp(core.d, -e);
  exp2 += e;
}

double ScaledMatrix::log_scale() const {
  return kLn2 * static_cast<double>(exp2);
}

double ScaledMatrix::log_max_abs() const {
  return log_scale() + std::log(core.max_abs());
}

ScaledMatrix ScaledMatrix::unit_det_inverse() const {
  ScaledMatrix out{{core.d, -core.b, -core.c, core.a}, exp2};
  return out;
}

double wrap_angle_half(double angle) {
  double a = std::fmod(angle, kPi);
  if (a < 0.0) a += kPi;
  if (a >= kPi) a -= kPi;
  return a;
}

double angle_gap(double from, double to) {
  double d = std::fmod(to - from, kPi);
  if (d > kPi / 2.0) d -= kPi;
  if (d <= -kPi / 2.0) d += kPi;
  return d;
}

double log_sigma_plus(const ScaledMatrix& m) {
  const Mat2& k = m.core;
  const double f = k.a * k.a + k.b * k.b + k.c * k.c + k.d * k.d;
  if (!(f > 0.0) || !std::isfinite(f))
    fail(ErrorCode::Overflow, "norm of a non-finite or zero matrix");
  const double det = k.det();
  const double gap = f - 2.0 * std::fabs(det);
  const double disc = std::sqrt(gap > 0.0 ? gap : 0.0) *
                      std::sqrt(f + 2.0 * std::fabs(det));
  return m.log_scale() + 0.5 * std::log(0.5 * (f + disc));
}

PolarData polar_decompose(const ScaledMatrix& m, double min_log_gap) {
  const double a = m.core.a, b = m.core.b, c = m.core.c, d = m.core.d;
  const double f = a * a + b * b + c * c + d * d; // Frobenius^2 of the core
  const double det = m.core.det();
  if (!(f > 0.0) || !std::isfinite(f))
    fail(ErrorCode::Overflow, "polar decomposition of a non-finite or zero matrix");

  // disc = (sigma_plus^2 - sigma_minus^2); the factored form avoids the
  // cancellation in f^2 - 4 det^2 when the singular values are close.
  const double gap = f - 2.0 * std::fabs(det); // (sigma_plus - sigma_minus)^2
  const double disc = std::sqrt(gap > 0.0 ? gap : 0.0) *
                      std::sqrt(f + 2.0 * std::fabs(det));
  const double sp2 = 0.5 * (f + disc);            // sigma_plus^2 of the core
  const double sp = std::sqrt(sp2);
  const double sm = std::fabs(det) / sp;          // sigma_minus, no cancellation

  PolarData out;
  out.log_sigma_plus = m.log_scale() + std::log(sp);
  out.log_sigma_minus = (sm > 0.0) ? m.log_scale() + std::log(sm)
                                   : -std::numeric_limits<double>::infinity();
  if (out.log_sigma_plus - out.log_sigma_minus <= min_log_gap)
    fail(ErrorCode::DegenerateNorm,
         "singular values coincide: contraction directions undefined");

  // s: eigenvector of M^T M for the small eigenvalue sigma_minus^2.
  {
    const double p = a * a + c * c;
    const double q = a * b + c * d;
    const double r = b * b + d * d;
    const double mu = sm * sm;
    // Candidate eigenvectors (q, mu - p) and (mu - r, q); take the larger.
    const double n1 = q * q + (mu - p) * (mu - p);
    const double n2 = (mu - r) * (mu - r) + q * q;
    double vx, vy;
    if (n1 >= n2) { vx = q; vy = mu - p; } else { vx = mu - r; vy = q; }
    out.s_angle = wrap_angle_half(std::atan2(vy, vx));
  }
  // u: eigenvector of M M^T for the large eigenvalue sigma_plus^2.
  {
    const double p = a * a + b * b;
    const double q = a * c + b * d;
    const double r = c * c + d * d;
    const double n1 = q * q + (sp2 - p) * (sp2 - p);
    const double n2 = (sp2 - r) * (sp2 - r) + q * q;
    double vx, vy;
    if (n1 >= n2) { vx = q; vy = sp2 - p; } else { vx = sp2 - r; vy = q; }
    out.u_angle = wrap_angle_half(std::atan2(vy, vx));
  }
  return out;
}

} // namespace qpl
