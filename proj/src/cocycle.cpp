#include "qpl/cocycle.hpp"

#include <cmath>

namespace qpl {

Mat2 transfer_matrix(const Potential& v, double lambda, double energy, double y) {
  return {energy - lambda * v(y), -1.0, 1.0, 0.0};
}

namespace {

// Exact-scale conjugation by diag(sqrt(k), 1/sqrt(k)); determinant unchanged.
ScaledMatrix conjugate_core(const ScaledMatrix& m, double k) {
  ScaledMatrix out{{m.core.a, m.core.b * k, m.core.c / k, m.core.d}, m.exp2};
  return out;
}

} // namespace

DirectionBatch direction_gap_batch(const Potential& v, double lambda, double alpha,
                                   double energy, const std::vector<double>& phases,
                                   const std::vector<std::int64_t>& steps,
                                   double diag_conj) {
  if (!(diag_conj > 0.0) || !std::isfinite(diag_conj))
    fail(ErrorCode::ConfigError, "diagonal conjugation must be positive and finite");
  CocycleRequest req;
  req.lambda = lambda;
  req.alpha = alpha;
  req.steps = steps;

  std::vector<CocycleLane> lanes(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) lanes[i] = {phases[i], energy};

  req.direction = OrbitDirection::Forward;
  auto fwd = run_cocycle_batch(v, req, lanes);
  req.direction = OrbitDirection::Backward;
  auto bwd = run_cocycle_batch(v, req, lanes);

  DirectionBatch out;
  out.steps = steps;
  out.at.assign(steps.size(), std::vector<DirectionData>(phases.size()));
  const bool conj = diag_conj != 1.0;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    for (std::size_t i = 0; i < phases.size(); ++i) {
      DirectionData& d = out.at[j][i];
      if (conj) {
        PolarData pf = polar_decompose(conjugate_core(fwd[i][j], diag_conj));
        PolarData pb = polar_decompose(conjugate_core(bwd[i][j], diag_conj));
        d.s_angle = pf.s_angle;
        d.u_angle = pb.s_angle;
        d.log_norm_fwd = log_sigma_plus(fwd[i][j]);
        d.log_norm_bwd = log_sigma_plus(bwd[i][j]);
      } else {
        PolarData pf = polar_decompose(fwd[i][j]);
        PolarData pb = polar_decompose(bwd[i][j]);
        d.s_angle = pf.s_angle;
        d.u_angle = pb.s_angle;
        d.log_norm_fwd = pf.log_sigma_plus;
        d.log_norm_bwd = pb.log_sigma_plus;
      }
      d.gap = angle_gap(d.u_angle, d.s_angle);
    }
  }
  return out;
}

DirectionData direction_gap(const Potential& v, double lambda, double alpha,
                            double energy, double phase, std::int64_t depth,
                            double diag_conj) {
  return direction_gap_batch(v, lambda, alpha, energy, {phase}, {depth}, diag_conj)
      .at[0][0];
}

double lyapunov_exponent(const Potential& v, double lambda, double alpha,
                         double energy, std::int64_t depth, int phase_count,
                         double x0) {
  if (phase_count < 1) fail(ErrorCode::ConfigError, "need at least one phase");
  if (depth < 1) fail(ErrorCode::ConfigError, "Lyapunov depth must be positive");
  CocycleRequest req{lambda, alpha, OrbitDirection::Forward, {depth}};
  std::vector<CocycleLane> lanes(phase_count);
  for (int i = 0; i < phase_count; ++i)
    lanes[i] = {wrap_unit(x0 + static_cast<double>(i) / phase_count), energy};
  auto prods = run_cocycle_batch(v, req, lanes);
  double acc = 0.0;
  for (int i = 0; i < phase_count; ++i) acc += log_sigma_plus(prods[i][0]);
  return acc / (static_cast<double>(phase_count) * static_cast<double>(depth));
}

} // namespace qpl
