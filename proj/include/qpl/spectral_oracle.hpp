#pragma once
// Independent spectral reference: dense diagonalization of finite boxes by a
// deterministic implicit-shift QL iteration, plus a rational-frequency trace
// scan that produces a padded interval cover of the spectrum.

#include <cstdint>
#include <utility>
#include <vector>

#include "qpl/arithmetic.hpp"
#include "qpl/potential.hpp"

namespace qpl {

struct TridiagonalEigen {
  std::vector<double> values;               // ascending
  std::vector<std::vector<double>> vectors; // vectors[k] pairs with values[k]
};

// Eigensystem of the symmetric tridiagonal matrix with the given diagonal
// and off-diagonal. Deterministic; largest-magnitude entry of each vector is
// made positive; eigenpairs are stably sorted by eigenvalue.
TridiagonalEigen tridiagonal_eigen(std::vector<double> diag, std::vector<double> off);

// Dense eigensystem of H restricted to sites -N..N with Dirichlet ends:
// (H u)_i = u_{i+1} + u_{i-1} + lambda v(theta + i alpha) u_i.
struct FiniteEigensystem {
  int half_size = 0; // N; matrix index j corresponds to site j - N
  double theta = 0.0;
  double norm_bound = 0.0; // 2 + lambda max |v|
  TridiagonalEigen eig;
};
FiniteEigensystem dense_eigensystem(const Potential& v, double lambda, double alpha,
                                    double theta, int half_size);

std::size_t nearest_eigenvalue_index(const TridiagonalEigen& eig, double energy);

// (H - E) u with Dirichlet ends; u indexed like the eigenvectors above.
std::vector<double> finite_operator_defect(const Potential& v, double lambda,
                                           double alpha, double theta, int half_size,
                                           const std::vector<double>& u, double energy);
double dirichlet_residual(const Potential& v, double lambda, double alpha,
                          double theta, int half_size, const std::vector<double>& u,
                          double energy);

// Interval cover of the spectrum from the best rational approximation p/q
// with q <= max_q: the periodic spectrum is where some phase gives
// |tr A_q(E, x)| <= 2, and each hit is padded by the grid step plus a
// Hoelder-type bound sqrt(6 lambda max|v'| |alpha - p/q|).
struct SpectrumCover {
  std::vector<std::pair<double, double>> intervals; // merged, padded
  double raw_measure = 0.0;    // measure of the unpadded grid hits
  double padded_measure = 0.0; // measure of `intervals`
  double padding = 0.0;
  double grid_step = 0.0;
  std::int64_t q = 0;

  bool contains(double energy) const;
};
SpectrumCover approximate_spectrum(const Potential& v, double lambda,
                                   const Frequency& freq, std::int64_t max_q = 100,
                                   int energy_grid = 4096, int phase_grid = 64);

} // namespace qpl
