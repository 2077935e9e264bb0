#include "kernel_detail.hpp"

namespace qpl {

double poly_cos2pi(double y) { return detail::poly_cos2pi_scalar(y); }

namespace detail {

PotentialData flatten_potential(const Potential& v) {
  PotentialData p;
  if (v.kind() == PotentialKind::Harmonic) {
    p.harmonic = true;
    p.coeffs = v.coefficients().data();
    p.ncoeff = v.coefficients().size();
    p.mean = v.mean();
  } else {
    p.harmonic = false;
    p.samples = v.samples().data();
    p.moments = v.spline_second_derivatives().data();
    p.nsamp = v.samples().size();
  }
  return p;
}

void cocycle_batch_scalar(const PotentialData& pot, const CocycleRequest& req,
                          const CocycleLane* lanes, std::size_t nlanes,
                          std::vector<std::vector<ScaledMatrix>>& out,
                          std::size_t out_offset) {
  const bool forward = req.direction == OrbitDirection::Forward;
  const double alpha = req.alpha;
  const double lambda = req.lambda;
  const std::int64_t n_last = req.steps.back();

  for (std::size_t lane = 0; lane < nlanes; ++lane) {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
    std::int64_t k2 = 0;
    double y = wrap_unit(lanes[lane].phase);
    const double energy = lanes[lane].energy;
    std::size_t next_snap = 0;
    auto renorm = [&]() {
      double m = std::fmax(std::fmax(std::fabs(a), std::fabs(b)),
                           std::fmax(std::fabs(c), std::fabs(d)));
      int e = std::ilogb(m);
      if (e != 0) {
        a = std::ldexp(a, -e);
        b = std::ldexp(b, -e);
        c = std::ldexp(c, -e);
        d = std::ldexp(d, -e);
        k2 += e;
      }
    };
    for (std::int64_t n = 1; n <= n_last; ++n) {
      if (forward) {
        double w = std::fma(-lambda, eval_potential_scalar(pot, y), energy);
        double na = std::fma(w, a, -c);
        double nb = std::fma(w, b, -d);
        c = a;
        d = b;
        a = na;
        b = nb;
        y += alpha;
        if (y >= 1.0) y -= 1.0;
      } else {
        y -= alpha;
        if (y < 0.0) y += 1.0;
        double w = std::fma(-lambda, eval_potential_scalar(pot, y), energy);
        double nc = std::fma(w, c, -a);
        double nd = std::fma(w, d, -b);
        a = c;
        b = d;
        c = nc;
        d = nd;
      }
      if ((n & 15) == 0) renorm();
      if (n == req.steps[next_snap]) {
        renorm();
        out[out_offset + lane][next_snap] = ScaledMatrix{{a, b, c, d}, k2};
        if (++next_snap == req.steps.size()) break;
      }
    }
  }
}

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

} // namespace detail
} // namespace qpl
