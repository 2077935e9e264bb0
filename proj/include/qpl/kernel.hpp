#pragma once
// Transfer-cocycle product kernels. A batch runs many independent lanes
// (phase, energy) through n steps of the one-step transfer map, recording
// renormalized scaled matrices at a sorted list of snapshot depths in one
// pass, so snapshots at different depths share their computed prefix.
//
// The scalar path is the reference; the AVX2 path is bit-identical to it
// by construction (same operation order, same fused multiply-adds, exact
// power-of-two renormalization).

#include <cstdint>
#include <vector>

#include "qpl/arithmetic.hpp"
#include "qpl/potential.hpp"
#include "qpl/scaled_matrix.hpp"

namespace qpl {

enum class KernelBackend { Scalar, Avx2 };

const char* kernel_backend_name(KernelBackend b);
// True when the backend can run on this build and CPU.
bool kernel_backend_available(KernelBackend b);
// Best available backend, overridable with QPL_KERNEL=scalar|avx2.
KernelBackend active_kernel_backend();
// Worker threads for batch calls, from QPL_THREADS (default 1). Lanes are
// split into contiguous chunks, so results do not depend on the count.
int kernel_thread_count();

// One independent product lane.
struct CocycleLane {
  double phase = 0.0;
  double energy = 0.0;
};

struct CocycleRequest {
  double lambda = 0.0;
  double alpha = 0.0;
  OrbitDirection direction = OrbitDirection::Forward;
  std::vector<std::int64_t> steps; // strictly increasing snapshot depths, >= 1
};

// out[lane][j] = product of the first steps[j] one-step matrices along the
// forward orbit x, x+a, ... (or the backward orbit x-a, x-2a, ...).
std::vector<std::vector<ScaledMatrix>> run_cocycle_batch(
    const Potential& v, const CocycleRequest& req,
    const std::vector<CocycleLane>& lanes, KernelBackend backend);

std::vector<std::vector<ScaledMatrix>> run_cocycle_batch(
    const Potential& v, const CocycleRequest& req,
    const std::vector<CocycleLane>& lanes);

// Single-lane convenience.
std::vector<ScaledMatrix> run_cocycle(const Potential& v, const CocycleRequest& req,
                                      const CocycleLane& lane);

// cos(2 pi y) by exact quadrant reduction and a degree-16 polynomial; the
// kernels use this instead of std::cos so both backends agree bitwise.
double poly_cos2pi(double y);

} // namespace qpl
