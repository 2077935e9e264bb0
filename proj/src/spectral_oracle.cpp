#include "qpl/spectral_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

#include "qpl/common.hpp"
#include "qpl/kernel.hpp"

namespace qpl {
namespace {

// ---------------------------------------------------------------------------
// Implicit-shift QL iteration for a symmetric tridiagonal matrix, with
// eigenvector accumulation. d has length n, e has length n with e[n-1]
// scratch; z is n x n row major, initialized to the identity, and ends with
// eigenvector k in column k.
// ---------------------------------------------------------------------------
void ql_implicit(std::vector<double>& d, std::vector<double>& e,
                 std::vector<double>& z, std::size_t n) {
  if (n <= 1) return;
  e[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) fail(ErrorCode::NonConvergent, "QL iteration stalled");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        bool underflow = false;
        for (std::size_t i = m; i-- > l;) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            // Rotation annihilated early: deflate and restart this block.
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (std::size_t k = 0; k < n; ++k) {
            f = z[k * n + i + 1];
            z[k * n + i + 1] = s * z[k * n + i] + c * f;
            z[k * n + i] = c * z[k * n + i] - s * f;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

// Site phase theta + k alpha reduced mod 1 in extended precision.
double site_phase(double theta, double alpha, std::int64_t k) {
  long double y = (long double)theta + (long double)k * (long double)alpha;
  y -= std::floor((double)y);
  double out = (double)(y - std::floor(y));
  if (out >= 1.0) out -= 1.0;
  if (out < 0.0) out += 1.0;
  return out;
}

double grid_max_abs(const Potential& v, bool derivative) {
  constexpr int kGrid = 4096;
  double best = 0.0;
  for (int k = 0; k < kGrid; ++k) {
    const double x = (double)k / kGrid; // nodes include the even extremals
    const double val = derivative ? v.derivative(x) : v(x);
    best = std::max(best, std::fabs(val));
  }
  return best;
}

} // namespace

// ---------------------------------------------------------------------------
// Eigensystems
// ---------------------------------------------------------------------------

TridiagonalEigen tridiagonal_eigen(std::vector<double> diag, std::vector<double> off) {
  const std::size_t n = diag.size();
  if (n == 0) fail(ErrorCode::ConfigError, "empty tridiagonal matrix");
  if (off.size() + 1 != n)
    fail(ErrorCode::ConfigError, "off-diagonal size must be one less than diagonal");
  for (double x : diag)
    if (!std::isfinite(x)) fail(ErrorCode::ConfigError, "non-finite diagonal entry");
  for (double x : off)
    if (!std::isfinite(x)) fail(ErrorCode::ConfigError, "non-finite off-diagonal entry");

  std::vector<double> e(n, 0.0);
  std::copy(off.begin(), off.end(), e.begin());
  std::vector<double> z(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) z[k * n + k] = 1.0;
  ql_implicit(diag, e, z, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return diag[a] < diag[b]; });

  TridiagonalEigen out;
  out.values.resize(n);
  out.vectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t col = order[j];
    out.values[j] = diag[col];
    std::vector<double>& vec = out.vectors[j];
    double norm2 = 0.0;
    std::size_t peak = 0;
    double peak_abs = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = z[k * n + col];
      vec[k] = x;
      norm2 += x * x;
      if (std::fabs(x) > peak_abs) {
        peak_abs = std::fabs(x);
        peak = k;
      }
    }
    const double scale =
        (vec[peak] < 0.0 ? -1.0 : 1.0) / std::sqrt(norm2); // peak entry positive
    for (std::size_t k = 0; k < n; ++k) vec[k] *= scale;
  }
  return out;
}

FiniteEigensystem dense_eigensystem(const Potential& v, double lambda, double alpha,
                                    double theta, int half_size) {
  if (half_size < 0) fail(ErrorCode::ConfigError, "negative box half size");
  if (!std::isfinite(lambda) || !std::isfinite(alpha) || !std::isfinite(theta))
    fail(ErrorCode::ConfigError, "non-finite operator parameter");
  const std::size_t n = 2 * (std::size_t)half_size + 1;
  std::vector<double> diag(n);
  for (std::size_t j = 0; j < n; ++j)
    diag[j] = lambda * v(site_phase(theta, alpha, (std::int64_t)j - half_size));
  std::vector<double> off(n - 1, 1.0);

  FiniteEigensystem sys;
  sys.half_size = half_size;
  sys.theta = theta;
  sys.norm_bound = 2.0 + std::fabs(lambda) * grid_max_abs(v, false);
  sys.eig = tridiagonal_eigen(std::move(diag), std::move(off));
  return sys;
}

std::size_t nearest_eigenvalue_index(const TridiagonalEigen& eig, double energy) {
  if (eig.values.empty()) fail(ErrorCode::ConfigError, "empty eigensystem");
  const auto it = std::lower_bound(eig.values.begin(), eig.values.end(), energy);
  if (it == eig.values.begin()) return 0;
  if (it == eig.values.end()) return eig.values.size() - 1;
  const std::size_t hi = (std::size_t)(it - eig.values.begin());
  const std::size_t lo = hi - 1;
  // Ties resolve to the lower index.
  return (energy - eig.values[lo] <= eig.values[hi] - energy) ? lo : hi;
}

std::vector<double> finite_operator_defect(const Potential& v, double lambda,
                                           double alpha, double theta, int half_size,
                                           const std::vector<double>& u, double energy) {
  const std::size_t n = 2 * (std::size_t)half_size + 1;
  if (u.size() != n) fail(ErrorCode::ConfigError, "vector size does not match box");
  std::vector<double> r(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double left = (j == 0) ? 0.0 : u[j - 1];
    const double right = (j + 1 == n) ? 0.0 : u[j + 1];
    const double w = lambda * v(site_phase(theta, alpha, (std::int64_t)j - half_size));
    r[j] = right + left + (w - energy) * u[j];
  }
  return r;
}

double dirichlet_residual(const Potential& v, double lambda, double alpha,
                          double theta, int half_size, const std::vector<double>& u,
                          double energy) {
  const std::vector<double> r =
      finite_operator_defect(v, lambda, alpha, theta, half_size, u, energy);
  double s = 0.0;
  for (double x : r) s += x * x;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Spectrum cover by rational approximation
// ---------------------------------------------------------------------------

bool SpectrumCover::contains(double energy) const {
  auto it = std::lower_bound(
      intervals.begin(), intervals.end(), energy,
      [](const std::pair<double, double>& iv, double e) { return iv.second < e; });
  return it != intervals.end() && it->first <= energy;
}

SpectrumCover approximate_spectrum(const Potential& v, double lambda,
                                   const Frequency& freq, std::int64_t max_q,
                                   int energy_grid, int phase_grid) {
  if (!std::isfinite(lambda)) fail(ErrorCode::ConfigError, "non-finite coupling");
  if (energy_grid < 16) fail(ErrorCode::ConfigError, "energy grid too small");
  if (phase_grid < 1) fail(ErrorCode::ConfigError, "phase grid too small");
  if (max_q < 1) fail(ErrorCode::ConfigError, "max_q must be positive");

  // Best convergent with denominator <= max_q.
  std::size_t pick = freq.q.size();
  for (std::size_t i = 0; i < freq.q.size(); ++i)
    if (freq.q[i] <= max_q) pick = i;
  if (pick == freq.q.size())
    fail(ErrorCode::ConfigError, "no convergent with denominator within max_q");
  const std::int64_t pnum = freq.p[pick];
  const std::int64_t qden = freq.q[pick];
  if (qden > 100000) fail(ErrorCode::ConfigError, "rational period too large for trace scan");
  const long double ratio = (long double)pnum / (long double)qden;
  const double delta = (double)std::fabs((long double)freq.value - ratio);

  const double max_v = grid_max_abs(v, false);
  const double max_dv = grid_max_abs(v, true);
  const double bound = 2.0 + std::fabs(lambda) * max_v;
  const double lo = -bound - 1.0;
  const double hi = bound + 1.0;
  const double step = (hi - lo) / (energy_grid - 1);
  const double padding = step + std::sqrt(6.0 * std::fabs(lambda) * max_dv * delta);

  CocycleRequest req;
  req.lambda = lambda;
  req.alpha = (double)ratio; // scan the periodic operator at p/q
  req.direction = OrbitDirection::Forward;
  req.steps = {qden};

  // tr A_q(E, x) is a trigonometric polynomial in x of degree about J*q (J =
  // harmonic content of v) whose amplitude grows like e^{q log lambda}, so
  // |tr| <= 2 happens on x-windows far too narrow to sample directly. A sign
  // change of the trace across adjacent phases forces a full crossing of
  // [-2, 2], so energies are marked covered on a sign flip or on a directly
  // small trace (flat cases). The phase count resolves the oscillation and is
  // kept coprime to q: a grid commensurate with 1/q would alias the
  // oscillation to a handful of values and lose the band edges.
  const std::size_t harm =
      (v.kind() == PotentialKind::Harmonic) ? v.coefficients().size() : 8;
  std::size_t nx = std::max<std::size_t>((std::size_t)phase_grid,
                                         8 * harm * (std::size_t)qden);
  while (std::gcd(nx, (std::size_t)qden) != 1) ++nx;

  std::vector<char> covered(energy_grid, 0);
  // Chunk the energy set so the snapshot buffer stays small.
  const std::size_t chunk_energies = std::max<std::size_t>(1, 65536 / nx);
  std::vector<CocycleLane> part;
  for (std::size_t k0 = 0; k0 < (std::size_t)energy_grid; k0 += chunk_energies) {
    const std::size_t k1 = std::min((std::size_t)energy_grid, k0 + chunk_energies);
    part.clear();
    for (std::size_t k = k0; k < k1; ++k) {
      const double energy = lo + step * (double)k;
      for (std::size_t j = 0; j < nx; ++j)
        part.push_back({((double)j + 0.5) / (double)nx, energy});
    }
    const auto out = run_cocycle_batch(v, req, part);
    for (std::size_t k = k0; k < k1; ++k) {
      int prev_sign = 0;
      int first_sign = 0;
      bool hit = false;
      for (std::size_t j = 0; j < nx && !hit; ++j) {
        const ScaledMatrix& m = out[(k - k0) * nx + j][0];
        const double t = m.core.a + m.core.d;
        const double mag = std::fabs(t);
        // |trace| <= 2 in log form so huge exp2 cannot overflow.
        if (mag == 0.0 || std::log2(mag) + (double)m.exp2 <= 1.0) {
          hit = true;
          break;
        }
        const int sign = (t > 0.0) ? 1 : -1;
        if (j == 0) first_sign = sign;
        if (j > 0 && sign != prev_sign) hit = true;
        prev_sign = sign;
      }
      if (!hit && nx > 1 && prev_sign != first_sign) hit = true; // wraparound pair
      covered[k] = hit ? 1 : 0;
    }
  }

  SpectrumCover cover;
  cover.q = qden;
  cover.grid_step = step;
  cover.padding = padding;
  std::vector<std::pair<double, double>> raw;
  int k = 0;
  while (k < energy_grid) {
    if (!covered[k]) {
      ++k;
      continue;
    }
    const int first = k;
    while (k < energy_grid && covered[k]) ++k;
    raw.emplace_back(lo + step * first, lo + step * (k - 1));
  }
  for (const auto& iv : raw) cover.raw_measure += iv.second - iv.first;
  for (const auto& iv : raw) {
    const double a = iv.first - padding;
    const double b = iv.second + padding;
    if (!cover.intervals.empty() && a <= cover.intervals.back().second)
      cover.intervals.back().second = std::max(cover.intervals.back().second, b);
    else
      cover.intervals.emplace_back(a, b);
  }
  for (const auto& iv : cover.intervals) cover.padded_measure += iv.second - iv.first;
  return cover;
}

} // namespace qpl
