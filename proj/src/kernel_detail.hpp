#pragma once
// Internal kernel plumbing shared by the scalar and AVX2 translation units.
// The polynomial coefficients and the step recurrences must stay identical
// across backends: bitwise equivalence is a tested invariant.

#include <cmath>
#include <cstddef>

#include "qpl/kernel.hpp"

namespace qpl::detail {

// cos((pi/2) z) = sum_k kCosCoef[k] z^(2k), |z| <= 1/2, remainder < 2.1e-18.
inline constexpr double kCosCoef[9] = {
    1.0,
    -1.2337005501361697,
    0.25366950790104803,
    -0.02086348076335296,
    0.0009192602748394266,
    -2.5202042373060607e-05,
    4.710874778818172e-07,
    -6.386603083791852e-09,
    6.565963114979473e-11,
};

// sin((pi/2) z) = z * sum_k kSinCoef[k] z^(2k), remainder < 8.4e-20.
inline constexpr double kSinCoef[9] = {
    1.5707963267948966,
    -0.6459640975062463,
    0.07969262624616705,
    -0.004681754135318688,
    0.00016044118478735983,
    -3.598843235212085e-06,
    5.692172921967927e-08,
    -6.688035109811468e-10,
    6.0669357311061955e-12,
};

inline double poly_cos2pi_scalar(double y) {
  double t = 4.0 * y;                 // exact: power-of-two scale
  double q = std::nearbyint(t);       // round half to even
  double z = t - q;                   // exact: |z| <= 1/2
  double s = z * z;
  double cs = kCosCoef[8];
  for (int k = 7; k >= 0; --k) cs = std::fma(cs, s, kCosCoef[k]);
  double sn = kSinCoef[8];
  for (int k = 7; k >= 0; --k) sn = std::fma(sn, s, kSinCoef[k]);
  sn *= z;
  switch (static_cast<long long>(q) & 3) {
    case 0: return cs;
    case 1: return -sn;
    case 2: return -cs;
    default: return sn;
  }
}

// Potential data flattened to raw arrays for the inner loops.
struct PotentialData {
  bool harmonic = true;
  const double* coeffs = nullptr; // harmonic coefficients a_1..a_J
  std::size_t ncoeff = 0;
  double mean = 0.0;
  const double* samples = nullptr; // spline data, tabulated potentials
  const double* moments = nullptr;
  std::size_t nsamp = 0;
};

PotentialData flatten_potential(const Potential& v);

// v(y) for y in [0,1); harmonic part via the Chebyshev recurrence
// cos(j phi) = 2 cos(phi) cos((j-1) phi) - cos((j-2) phi).
inline double eval_potential_scalar(const PotentialData& p, double y) {
  if (p.harmonic) {
    double c1 = poly_cos2pi_scalar(y);
    double acc = std::fma(p.coeffs[0], c1, p.mean);
    double cjm2 = 1.0, cjm1 = c1;
    double t2 = c1 + c1;
    for (std::size_t j = 1; j < p.ncoeff; ++j) {
      double cj = std::fma(t2, cjm1, -cjm2);
      acc = std::fma(p.coeffs[j], cj, acc);
      cjm2 = cjm1;
      cjm1 = cj;
    }
    return acc;
  }
  const double n = static_cast<double>(p.nsamp);
  double t = y * n;
  std::size_t i = static_cast<std::size_t>(t);
  if (i >= p.nsamp) i = p.nsamp - 1;
  double a = t - static_cast<double>(i);
  double b = 1.0 - a;
  std::size_t ip = i + 1 == p.nsamp ? 0 : i + 1;
  const double h = 1.0 / n;
  return p.moments[i] * b * b * b * h * h / 6.0 +
         p.moments[ip] * a * a * a * h * h / 6.0 +
         (p.samples[i] - p.moments[i] * h * h / 6.0) * b +
         (p.samples[ip] - p.moments[ip] * h * h / 6.0) * a;
}

void cocycle_batch_scalar(const PotentialData& pot, const CocycleRequest& req,
                          const CocycleLane* lanes, std::size_t nlanes,
                          std::vector<std::vector<ScaledMatrix>>& out,
                          std::size_t out_offset);

#if defined(QPL_BUILD_AVX2)
void cocycle_batch_avx2(const PotentialData& pot, const CocycleRequest& req,
                        const CocycleLane* lanes, std::size_t nlanes,
                        std::vector<std::vector<ScaledMatrix>>& out,
                        std::size_t out_offset);
#endif

bool cpu_supports_avx2();

} // namespace qpl::detail
