#pragma once
// Even 1-periodic sampling potentials: cosine polynomials and periodic
// cubic splines, with the cosine-type validation used by the multiscale
// machinery (exactly one non-degenerate max and min, both on {0, 1/2}).

#include <cstddef>
#include <vector>

#include "qpl/common.hpp"

namespace qpl {

enum class PotentialKind { Harmonic, Tabulated };

class Potential {
public:
  // v(x) = mean + sum_{j >= 1} coeffs[j-1] cos(2 pi j x).
  static Potential harmonics(std::vector<double> coeffs, double mean = 0.0);
  // v(x) = 2 cos(2 pi x).
  static Potential amo();
  // Periodic cubic spline through samples[i] at x = i / samples.size().
  static Potential tabulated(std::vector<double> samples);

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  PotentialKind kind() const { return kind_; }
  // Harmonic data (empty for tabulated potentials).
  const std::vector<double>& coefficients() const { return coeffs_; }
  double mean() const { return mean_; }
  // Tabulated data (empty for harmonic potentials).
  const std::vector<double>& samples() const { return samples_; }
  const std::vector<double>& spline_second_derivatives() const { return spline_m_; }

private:
  Potential() = default;

  PotentialKind kind_ = PotentialKind::Harmonic;
  std::vector<double> coeffs_;
  double mean_ = 0.0;
  std::vector<double> samples_;
  std::vector<double> spline_m_; // spline second derivatives at the nodes
};

struct CriticalPoint {
  double x = 0.0;
  double value = 0.0;
  double curvature = 0.0; // v''(x)
};

struct CosineTypeReport {
  bool even = false;
  bool two_extremals = false;
  bool nondegenerate = false;
  std::vector<CriticalPoint> critical_points; // sorted by x
  double z_max = 0.0, z_min = 0.0;   // locations of the max / min
  double v_max = 0.0, v_min = 0.0;
  double max_abs_value = 0.0;
  double max_abs_derivative = 0.0;
  double max_abs_second = 0.0;
  double evenness_residual = 0.0;    // max |v(x) - v(-x)| over the scan grid

  bool cosine_type() const { return even && two_extremals && nondegenerate; }
};

// Scans v' on a cell-centered grid, refines each sign change by bisection,
// and classifies the critical points. `degeneracy_rel` is the threshold on
// |v''(c)| relative to max |v''|.
CosineTypeReport validate_cosine_type(const Potential& v, int grid = 4096,
                                      double degeneracy_rel = 1e-6);

// Throws NotEven / TooManyCriticalPoints / DegenerateCritical if v fails.
CosineTypeReport require_cosine_type(const Potential& v, int grid = 4096,
                                     double degeneracy_rel = 1e-6);

} // namespace qpl
