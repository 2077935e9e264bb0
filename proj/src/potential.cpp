#include "qpl/potential.hpp"

#include <algorithm>
#include <cmath>

namespace qpl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Periodic cubic spline second derivatives: cyclic tridiagonal system
// m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h^2,
// solved by the Sherman-Morrison reduction of the cyclic corner terms.
std::vector<double> periodic_spline_moments(const std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ym = y[(i + n - 1) % n], yp = y[(i + 1) % n];
    d[i] = 6.0 * (ym - 2.0 * y[i] + yp) / (h * h);
  }

  const double gamma = -4.0;
  std::vector<double> diag(n, 4.0);
  diag[0] -= gamma;
  diag[n - 1] -= 1.0 / gamma;
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = 1.0;

  auto thomas = [&](std::vector<double> rhs) {
    std::vector<double> c(n, 0.0), x(n, 0.0);
    double beta = diag[0];
    x[0] = rhs[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
      c[i] = 1.0 / beta;
      beta = diag[i] - c[i];
      x[i] = (rhs[i] - x[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i + 1] * x[i + 1];
    return x;
  };

  std::vector<double> xs = thomas(d);
  std::vector<double> zs = thomas(u);
  double factor = (xs[0] + xs[n - 1] / gamma) / (1.0 + zs[0] + zs[n - 1] / gamma);
  for (std::size_t i = 0; i < n; ++i) xs[i] -= factor * zs[i];
  return xs;
}

} // namespace

Potential Potential::harmonics(std::vector<double> coeffs, double mean) {
  if (coeffs.empty())
    fail(ErrorCode::ConfigError, "harmonic potential needs at least one coefficient");
  Potential v;
  v.kind_ = PotentialKind::Harmonic;
  v.coeffs_ = std::move(coeffs);
  v.mean_ = mean;
  return v;
}

Potential Potential::amo() { return harmonics({2.0}); }

Potential Potential::tabulated(std::vector<double> samples) {
  if (samples.size() < 8)
    fail(ErrorCode::ConfigError, "tabulated potential needs at least 8 samples");
  Potential v;
  v.kind_ = PotentialKind::Tabulated;
  v.spline_m_ = periodic_spline_moments(samples, 1.0 / static_cast<double>(samples.size()));
  v.samples_ = std::move(samples);
  return v;
}

double Potential::operator()(double x) const {
  if (kind_ == PotentialKind::Harmonic) {
    double acc = mean_;
    double phi = kTwoPi * wrap_unit(x);
    for (std::size_t j = 0; j < coeffs_.size(); ++j)
      acc += coeffs_[j] * std::cos(static_cast<double>(j + 1) * phi);
    return acc;
  }
  const std::size_t n = samples_.size();
  const double h = 1.0 / static_cast<double>(n);
  double y = wrap_unit(x) * static_cast<double>(n);
  std::size_t i = std::min(static_cast<std::size_t>(y), n - 1);
  double a = y - static_cast<double>(i);        // in [0,1): (x - x_i)/h
  double b = 1.0 - a;
  std::size_t ip = (i + 1) % n;
  return spline_m_[i] * b * b * b * h * h / 6.0 +
         spline_m_[ip] * a * a * a * h * h / 6.0 +
         (samples_[i] - spline_m_[i] * h * h / 6.0) * b +
         (samples_[ip] - spline_m_[ip] * h * h / 6.0) * a;
}

double Potential::derivative(double x) const {
  if (kind_ == PotentialKind::Harmonic) {
    double acc = 0.0;
    double phi = kTwoPi * wrap_unit(x);
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
      double w = static_cast<double>(j + 1);
      acc -= coeffs_[j] * kTwoPi * w * std::sin(w * phi);
    }
    return acc;
  }
  const std::size_t n = samples_.size();
  const double h = 1.0 / static_cast<double>(n);
  double y = wrap_unit(x) * static_cast<double>(n);
  std::size_t i = std::min(static_cast<std::size_t>(y), n - 1);
  double a = y - static_cast<double>(i);
  double b = 1.0 - a;
  std::size_t ip = (i + 1) % n;
  return -spline_m_[i] * b * b * h / 2.0 + spline_m_[ip] * a * a * h / 2.0 +
         (samples_[ip] - samples_[i]) / h - (spline_m_[ip] - spline_m_[i]) * h / 6.0;
}

double Potential::second_derivative(double x) const {
  if (kind_ == PotentialKind::Harmonic) {
    double acc = 0.0;
    double phi = kTwoPi * wrap_unit(x);
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
      double w = static_cast<double>(j + 1);
      acc -= coeffs_[j] * kTwoPi * kTwoPi * w * w * std::cos(w * phi);
    }
    return acc;
  }
  const std::size_t n = samples_.size();
  double y = wrap_unit(x) * static_cast<double>(n);
  std::size_t i = std::min(static_cast<std::size_t>(y), n - 1);
  double a = y - static_cast<double>(i);
  std::size_t ip = (i + 1) % n;
  return spline_m_[i] * (1.0 - a) + spline_m_[ip] * a;
}

CosineTypeReport validate_cosine_type(const Potential& v, int grid,
                                      double degeneracy_rel) {
  if (grid < 16) fail(ErrorCode::ConfigError, "validation grid too coarse");
  CosineTypeReport rep;

  // Cell-centered grid: never lands on 0 or 1/2 where v' vanishes by symmetry.
  std::vector<double> xs(grid), d1(grid);
  for (int k = 0; k < grid; ++k) {
    xs[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(grid);
    d1[k] = v.derivative(xs[k]);
    double val = v(xs[k]);
    double d2 = v.second_derivative(xs[k]);
    rep.max_abs_value = std::max(rep.max_abs_value, std::fabs(val));
    rep.max_abs_derivative = std::max(rep.max_abs_derivative, std::fabs(d1[k]));
    rep.max_abs_second = std::max(rep.max_abs_second, std::fabs(d2));
    rep.evenness_residual = std::max(rep.evenness_residual, std::fabs(val - v(-xs[k])));
  }
  rep.even = rep.evenness_residual <= 1e-10 * std::max(1.0, rep.max_abs_value);

  // Refine each sign change of v' by bisection.
  auto sign = [](double t) { return t >= 0.0 ? 1 : -1; };
  for (int k = 0; k < grid; ++k) {
    int kn = (k + 1) % grid;
    if (sign(d1[k]) == sign(d1[kn])) continue;
    double lo = xs[k], hi = xs[k] + 1.0 / static_cast<double>(grid);
    double flo = d1[k];
    for (int it = 0; it < 80 && (hi - lo) > 1e-14; ++it) {
      double mid = 0.5 * (lo + hi);
      double fm = v.derivative(mid);
      if (sign(fm) == sign(flo)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    CriticalPoint cp;
    cp.x = wrap_unit(0.5 * (lo + hi));
    cp.value = v(cp.x);
    cp.curvature = v.second_derivative(cp.x);
    rep.critical_points.push_back(cp);
  }
  std::sort(rep.critical_points.begin(), rep.critical_points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.x < b.x; });

  rep.two_extremals = rep.critical_points.size() == 2;
  if (rep.two_extremals) {
    const CriticalPoint& a = rep.critical_points[0];
    const CriticalPoint& b = rep.critical_points[1];
    const CriticalPoint& mx = (a.value >= b.value) ? a : b;
    const CriticalPoint& mn = (a.value >= b.value) ? b : a;
    rep.z_max = mx.x;
    rep.v_max = mx.value;
    rep.z_min = mn.x;
    rep.v_min = mn.value;
    double thr = degeneracy_rel * rep.max_abs_second;
    rep.nondegenerate =
        std::fabs(mx.curvature) > thr && std::fabs(mn.curvature) > thr &&
        mx.curvature < 0.0 && mn.curvature > 0.0;
  }
  return rep;
}

CosineTypeReport require_cosine_type(const Potential& v, int grid,
                                     double degeneracy_rel) {
  CosineTypeReport rep = validate_cosine_type(v, grid, degeneracy_rel);
  if (!rep.even)
    fail(ErrorCode::NotEven, "potential is not even about 0");
  if (!rep.two_extremals)
    fail(ErrorCode::TooManyCriticalPoints,
         "potential must have exactly one max and one min per period");
  if (!rep.nondegenerate)
    fail(ErrorCode::DegenerateCritical, "potential extremal is degenerate");
  return rep;
}

} // namespace qpl
