#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "kernel_detail.hpp"

namespace qpl {

const char* kernel_backend_name(KernelBackend b) {
  switch (b) {
    case KernelBackend::Scalar: return "scalar";
    case KernelBackend::Avx2: return "avx2";
  }
  return "unknown";
}

bool kernel_backend_available(KernelBackend b) {
  if (b == KernelBackend::Scalar) return true;
#if defined(QPL_BUILD_AVX2)
  return detail::cpu_supports_avx2();
#else
  return false;
#endif
}

int kernel_thread_count() {
  // Read per call (not cached) so a process can change QPL_THREADS between
  // batches; the tests rely on this to compare thread counts in-process.
  if (const char* env = std::getenv("QPL_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1 && n <= 256) return static_cast<int>(n);
  }
  return 1;
}

KernelBackend active_kernel_backend() {
  static const KernelBackend cached = [] {
    if (const char* env = std::getenv("QPL_KERNEL")) {
      std::string s(env);
      if (s == "scalar") return KernelBackend::Scalar;
      if (s == "avx2" && kernel_backend_available(KernelBackend::Avx2))
        return KernelBackend::Avx2;
    }
    return kernel_backend_available(KernelBackend::Avx2) ? KernelBackend::Avx2
                                                         : KernelBackend::Scalar;
  }();
  return cached;
}

std::vector<std::vector<ScaledMatrix>> run_cocycle_batch(
    const Potential& v, const CocycleRequest& req,
    const std::vector<CocycleLane>& lanes, KernelBackend backend) {
  if (lanes.empty()) fail(ErrorCode::ConfigError, "cocycle batch needs lanes");
  if (req.steps.empty()) fail(ErrorCode::ConfigError, "cocycle batch needs snapshot depths");
  for (std::size_t j = 0; j < req.steps.size(); ++j) {
    if (req.steps[j] < 1)
      fail(ErrorCode::ConfigError, "snapshot depths must be >= 1");
    if (j > 0 && req.steps[j] <= req.steps[j - 1])
      fail(ErrorCode::ConfigError, "snapshot depths must be strictly increasing");
  }

  std::vector<std::vector<ScaledMatrix>> out(
      lanes.size(), std::vector<ScaledMatrix>(req.steps.size()));
  detail::PotentialData pot = detail::flatten_potential(v);

  // The AVX2 path implements the harmonic representation only; splines fall
  // back to the (bit-identical) scalar path.
  auto run_range = detail::cocycle_batch_scalar;
#if defined(QPL_BUILD_AVX2)
  if (backend == KernelBackend::Avx2 &&
      kernel_backend_available(KernelBackend::Avx2) && pot.harmonic)
    run_range = detail::cocycle_batch_avx2;
#else
  (void)backend;
#endif

  // Lanes are independent, so splitting them into contiguous per-thread
  // chunks leaves every lane's arithmetic unchanged: results are bitwise
  // identical for any QPL_THREADS value.
  const std::size_t threads = std::min<std::size_t>(
      static_cast<std::size_t>(kernel_thread_count()), lanes.size());
  if (threads <= 1) {
    run_range(pot, req, lanes.data(), lanes.size(), out, 0);
    return out;
  }

  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (lanes.size() + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(lanes.size(), lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, w, lo, hi] {
      try {
        run_range(pot, req, lanes.data() + lo, hi - lo, out, lo);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& worker : pool) worker.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  return out;
}

std::vector<std::vector<ScaledMatrix>> run_cocycle_batch(
    const Potential& v, const CocycleRequest& req,
    const std::vector<CocycleLane>& lanes) {
  return run_cocycle_batch(v, req, lanes, active_kernel_backend());
}

std::vector<ScaledMatrix> run_cocycle(const Potential& v, const CocycleRequest& req,
                                      const CocycleLane& lane) {
  return run_cocycle_batch(v, req, {lane}, active_kernel_backend())[0];
}

} // namespace qpl
