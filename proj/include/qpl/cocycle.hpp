#pragma once
// Finite-scale direction data of the transfer cocycle: most contracted
// directions of the forward and backward products, their signed angle gap,
// and Lyapunov exponent estimates.

#include <cstdint>
#include <vector>

#include "qpl/kernel.hpp"
#include "qpl/potential.hpp"
#include "qpl/scaled_matrix.hpp"

namespace qpl {

// One-step transfer matrix [[E - lambda v(y), -1], [1, 0]].
Mat2 transfer_matrix(const Potential& v, double lambda, double energy, double y);

// Contraction data of A_{+n}(x) and A_{-n}(x) at one phase and depth.
struct DirectionData {
  double s_angle = 0.0;      // most contracted input direction, forward product
  double u_angle = 0.0;      // most contracted input direction, backward product
  double gap = 0.0;          // signed angle from u to s, in (-pi/2, pi/2]
  double log_norm_fwd = 0.0; // log |A_{+n}(x)|
  double log_norm_bwd = 0.0; // log |A_{-n}(x)|
};

struct DirectionBatch {
  std::vector<std::int64_t> steps;
  std::vector<std::vector<DirectionData>> at; // [snapshot][lane]
};

// Direction data over a shared grid of phases at each sorted snapshot depth.
// One kernel pass per orbit direction: snapshots share their computed prefix,
// which suppresses common-mode round-off when differencing gaps across depths.
//
// diag_conj = k conjugates each product by diag(sqrt(k), 1/sqrt(k)) before
// taking angles (core -> {a, k b, c / k, d}); zeros of the gap are invariant
// but the angle parameterization matches the k-rescaled frame. Norm fields
// always refer to the unconjugated product.
DirectionBatch direction_gap_batch(const Potential& v, double lambda, double alpha,
                                   double energy, const std::vector<double>& phases,
                                   const std::vector<std::int64_t>& steps,
                                   double diag_conj = 1.0);

DirectionData direction_gap(const Potential& v, double lambda, double alpha,
                            double energy, double phase, std::int64_t depth,
                            double diag_conj = 1.0);

// Average of (1/n) log |A_n(x_j)| over `phase_count` equally spaced phases
// starting at x0.
double lyapunov_exponent(const Potential& v, double lambda, double alpha,
                         double energy, std::int64_t depth, int phase_count = 8,
                         double x0 = 0.01);

} // namespace qpl
