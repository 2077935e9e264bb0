#pragma once
// Overflow-safe 2x2 matrices M = 2^exp2 * core and their closed-form
// singular-value / singular-direction data. The power-of-two scale makes
// renormalization exact: no rounding is ever introduced by rescaling.

#include <cstdint>

#include "qpl/common.hpp"

namespace qpl {

struct Mat2 {
  double a = 1.0, b = 0.0;
  double c = 0.0, d = 1.0;

  double det() const { return a * d - b * c; }
  double max_abs() const;
  friend Mat2 operator*(const Mat2& l, const Mat2& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
            l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator*(const Mat2& m, const Vec2& v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}

// M = 2^exp2 * core. After renormalize(), max |core entry| lies in [1, 2).
struct ScaledMatrix {
  Mat2 core;
  std::int64_t exp2 = 0;

  static ScaledMatrix identity() { return {}; }

  // Exact: shifts exponents only.
  void renormalize();

  double log_scale() const;            // exp2 * ln 2
  double log_max_abs() const;          // log of the max-entry norm of M
  // Adjugate with the same scale; equals M^-1 when det(M) = 1.
  ScaledMatrix unit_det_inverse() const;

  friend ScaledMatrix operator*(const ScaledMatrix& l, const ScaledMatrix& r) {
    ScaledMatrix out{l.core * r.core, l.exp2 + r.exp2};
    out.renormalize();
    return out;
  }
};

// Singular data of M = 2^exp2 * core. Angles parameterize directions in
// RP^1 and live in [0, pi).
struct PolarData {
  double log_sigma_plus = 0.0;   // log of the largest singular value of M
  double log_sigma_minus = 0.0;  // log of the smallest (may be -inf)
  double s_angle = 0.0;          // most contracted input direction
  double u_angle = 0.0;          // most expanded output direction
};

// Closed-form 2x2 SVD. Throws DegenerateNorm when the singular values
// coincide to within `min_log_gap` so the directions are undefined.
PolarData polar_decompose(const ScaledMatrix& m, double min_log_gap = 1e-8);

// log of the largest singular value only; never throws on near-isometries.
double log_sigma_plus(const ScaledMatrix& m);

// Unit vector at an RP^1 angle.
inline Vec2 direction_vector(double angle) {
  return Vec2{std::cos(angle), std::sin(angle)};
}

// Representative of an RP^1 angle in [0, pi).
double wrap_angle_half(double angle);

// Signed gap between two RP^1 angles, in (-pi/2, pi/2].
double angle_gap(double from, double to);

} // namespace qpl
