#include "qpl/reports.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "qpl/eigen.hpp"
#include "qpl/induction.hpp"
#include "qpl/lmeasure.hpp"
#include "qpl/spectral_oracle.hpp"

namespace qpl {
namespace {

using nlohmann::json;

json effective_config(const RunConfig& c) {
  return json::parse(config_to_json(c));
}

json scale_block(const ScaleState& s, const Frequency& freq) {
  json j;
  j["source"] = s.depth == 0 ? "induction.initialize_scale_one"
                             : "induction.advance_scale";
  j["i"] = s.i;
  j["t"] = s.t;
  j["c"] = {s.c[0], s.c[1]};
  j["radius"] = s.radius;
  j["depth"] = s.depth;
  j["q_scale"] = s.q_scale;
  j["r_plus"] = s.r_plus;
  j["r_minus"] = s.r_minus;
  j["r"] = s.r;

  SeparationResult sep = separation_check(s, freq);
  json sj;
  sj["source"] = "induction.separation_check";
  sj["ok"] = sep.ok;
  sj["worst_k"] = sep.worst_k;
  sj["worst_margin"] = sep.worst_margin;
  sj["threshold"] = sep.threshold;
  j["separation"] = sj;
  return j;
}

json estimate_block(int from, const EstimateReport& r) {
  json j;
  j["source"] = "induction.verify_scale_estimates";
  j["from"] = from;
  j["to"] = from + 1;
  j["r_ref"] = r.r_ref;
  j["contraction"] = {r.contraction[0], r.contraction[1]};
  j["contraction_bound"] = r.contraction_bound;
  j["contraction_fit"] = r.contraction_fit;
  j["contraction_ok"] = r.contraction_ok;
  j["min_growth_ratio"] = r.min_growth_ratio;
  j["growth_ok"] = r.growth_ok;
  j["cubic_constant"] = r.cubic_constant;
  j["cubic_ok"] = r.cubic_ok;
  j["sup_gap"] = r.sup_gap;
  j["gap_bound"] = r.gap_bound;
  j["gap_fit"] = r.gap_fit;
  j["gap_comparable"] = r.gap_comparable;
  j["gap_ok"] = r.gap_ok;
  j["evenness_prev"] = r.evenness_prev;
  j["evenness_next"] = r.evenness_next;
  j["evenness_bound"] = r.evenness_bound;
  j["evenness_ok"] = r.evenness_ok;
  return j;
}

json pair_block(const LocalizedEigenpair& p) {
  json j;
  j["source"] = "eigen.localized_eigenpair";
  j["theta"] = p.theta;
  j["theta_reduced"] = p.theta_reduced;
  j["energy"] = p.energy;
  j["t"] = p.t;
  j["gap"] = p.gap;
  j["decay_rate"] = p.decay.rate;
  j["goodness_constant"] = p.goodness.constant;
  j["goodness_rate"] = p.goodness.rate;
  j["goodness_ok"] = p.goodness.ok;

  json lj;
  lj["source"] = "eigen.stable_unstable_limits";
  lj["s_inf"] = p.s_inf;
  lj["u_inf"] = p.u_inf;
  lj["c_inf"] = p.c_inf;
  lj["window_radius"] = p.radius;
  lj["window_drift"] = p.drift;
  j["limits"] = lj;

  json fj;
  fj["source"] = "eigen.build_eigenfunction";
  fj["n_max"] = p.fn.n_max;
  fj["residual_l2"] = p.fn.residual_l2;
  fj["residual_worst"] = p.fn.residual_worst;
  fj["worst_site"] = p.fn.worst_site;
  fj["peak_site"] = p.fn.peak_site;
  fj["norm_bound"] = p.fn.norm_bound;
  fj["norm_error"] = p.fn.norm_error;
  fj["seam_angle"] = p.fn.seam_angle;
  j["function"] = fj;

  json dj;
  dj["source"] = "eigen.fit_decay_rate";
  dj["rate"] = p.decay.rate;
  dj["stderr"] = p.decay.stderr_rate;
  dj["intercept"] = p.decay.intercept;
  dj["samples"] = p.decay.samples;
  j["decay"] = dj;
  return j;
}

json entry_block(const MeasureEntry& e) {
  json j;
  j["source"] = "lmeasure.completeness_entry";
  j["m"] = e.m;
  j["theta"] = e.theta;
  j["ok"] = e.ok;
  if (e.ok) {
    j["energy"] = e.energy;
    j["weight"] = e.weight;
    j["gap"] = e.gap;
    j["residual"] = e.residual;
    j["decay_rate"] = e.decay_rate;
  } else {
    j["code"] = error_name(e.code);
    j["stage"] = e.stage;
    j["message"] = e.message;
  }
  return j;
}

ReportResult wrap(const RunConfig& c, const char* subcommand, json report) {
  json doc;
  doc["subcommand"] = subcommand;
  doc["config"] = effective_config(c);
  doc["report"] = std::move(report);
  return {doc.dump(2) + "\n", 0};
}

// Box eigenvector mass summary: peak site, mass on sites {0, 1} (the
// completeness weight convention), and the rms site spread.
struct MassProfile {
  int peak_site = 0;
  double mass_01 = 0.0;
  double spread = 0.0;
};

MassProfile mass_profile(const std::vector<double>& u, int half_size) {
  MassProfile mp;
  double best = -1.0, mean = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const int site = static_cast<int>(k) - half_size;
    const double w = u[k] * u[k];
    if (std::fabs(u[k]) > best) {
      best = std::fabs(u[k]);
      mp.peak_site = site;
    }
    mean += site * w;
    norm += w;
  }
  if (norm > 0.0) mean /= norm;
  double var = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const int site = static_cast<int>(k) - half_size;
    var += (site - mean) * (site - mean) * u[k] * u[k];
  }
  if (norm > 0.0) var /= norm;
  mp.spread = std::sqrt(var);
  const std::size_t z = static_cast<std::size_t>(half_size);
  mp.mass_01 = 0.5 * (u[z] * u[z] + u[z + 1] * u[z + 1]);
  return mp;
}

} // namespace

std::string format_number(double x) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

ReportResult spectrum_report(const RunConfig& c) {
  const Potential v = c.potential.realize();
  const Frequency freq = c.alpha.realize();
  SpectrumCover cover = approximate_spectrum(v, c.lambda, freq);

  json r;
  r["source"] = "spectral_oracle.approximate_spectrum";
  r["q"] = cover.q;
  r["grid_step"] = cover.grid_step;
  r["padding"] = cover.padding;
  r["raw_measure"] = cover.raw_measure;
  r["padded_measure"] = cover.padded_measure;
  json iv = json::array();
  for (const auto& [lo, hi] : cover.intervals) iv.push_back({lo, hi});
  r["intervals"] = iv;
  return wrap(c, "spectrum", std::move(r));
}

ReportResult induct_report(const RunConfig& c) {
  if (!c.t)
    fail(ErrorCode::ConfigError,
         "config field \"t\" is required: induct needs the scaled energy");
  const Potential v = c.potential.realize();
  const Frequency freq = c.alpha.realize();

  std::vector<ScaleState> chain;
  chain.push_back(initialize_scale_one(v, *c.t, c.lambda, freq, c.induction));
  for (int i = 1; i < c.scales; ++i)
    chain.push_back(advance_scale(chain.back(), v, freq));

  json r;
  r["source"] = "induction";
  json scales = json::array();
  for (const auto& s : chain) scales.push_back(scale_block(s, freq));
  r["scales"] = std::move(scales);
  json transitions = json::array();
  for (std::size_t k = 0; k + 1 < chain.size(); ++k)
    transitions.push_back(estimate_block(
        chain[k].i, verify_scale_estimates(chain[k], chain[k + 1],
                                           c.estimate_options())));
  r["transitions"] = std::move(transitions);
  return wrap(c, "induct", std::move(r));
}

ReportResult eigen_report(const RunConfig& c) {
  const Potential v = c.potential.realize();
  const Frequency freq = c.alpha.realize();
  EigenOutcome out = try_localized_eigenpair(v, c.theta, c.lambda, freq,
                                             c.eigen_options());
  if (!out.ok) {
    json doc;
    doc["subcommand"] = "eigen";
    doc["config"] = effective_config(c);
    json e;
    e["code"] = error_name(out.code);
    e["stage"] = out.stage;
    e["message"] = out.message;
    doc["error"] = e;
    return {doc.dump(2) + "\n", exit_category(out.code)};
  }
  return wrap(c, "eigen", pair_block(*out.pair));
}

ReportResult eigen_csv(const RunConfig& c) {
  const Potential v = c.potential.realize();
  const Frequency freq = c.alpha.realize();
  LocalizedEigenpair p = localized_eigenpair(v, c.theta, c.lambda, freq,
                                             c.eigen_options());
  std::ostringstream out;
  out << "n,u_n,log_env\n";
  for (std::size_t k = 0; k < p.fn.samples.size(); ++k) {
    const int n = static_cast<int>(k) - p.fn.n_max;
    out << n << ',' << format_number(p.fn.samples[k]) << ','
        << format_number(p.fn.log_env[k]) << '\n';
  }
  return {out.str(), 0};
}

ReportResult measure_report(const RunConfig& c) {
  const Potential v = c.potential.realize();
  const Frequency freq = c.alpha.realize();
  CompletenessReport rep = completeness_check(v, c.theta, c.lambda, freq,
                                              c.measure_options());
  json r;
  r["source"] = "lmeasure.completeness_check";
  r["theta"] = rep.theta;
  r["lambda"] = rep.lambda;
  r["half_count"] = rep.half_count;
  r["failures"] = rep.failures;
  r["diophantine_ok"] = rep.diophantine_ok;
  r["diophantine_margin"] = rep.diophantine_margin;
  r["diophantine_worst_k"] = rep.diophantine_worst_k;
  r["total"] = rep.total;
  r["tail"] = rep.tail;
  r["defect"] = rep.defect;
  json entries = json::array();
  for (const auto& e : rep.entries) entries.push_back(entry_block(e));
  r["entries"] = std::move(entries);
  json collisions = json::array();
  for (const auto& col : rep.collisions)
    collisions.push_back({{"m_a", col.m_a},
                          {"m_b", col.m_b},
                          {"energy_a", col.energy_a},
                          {"energy_b", col.energy_b}});
  r["collisions"] = std::move(collisions);
  return wrap(c, "measure", std::move(r));
}

ReportResult measure_csv(const RunConfig& c) {
  const Potential v = c.potential.realize();
  const Frequency freq = c.alpha.realize();
  CompletenessReport rep = completeness_check(v, c.theta, c.lambda, freq,
                                              c.measure_options());
  std::ostringstream out;
  out << "m,E_m,w_m,ok\n";
  for (const auto& e : rep.entries)
    out << e.m << ',' << format_number(e.energy) << ','
        << format_number(e.weight) << ',' << (e.ok ? 1 : 0) << '\n';
  return {out.str(), 0};
}

ReportResult oracle_report(const RunConfig& c) {
  const Potential v = c.potential.realize();
  const Frequency freq = c.alpha.realize();
  FiniteEigensystem sys = dense_eigensystem(v, c.lambda, freq.alpha(),
                                            c.theta, c.n_max);
  json r;
  r["source"] = "spectral_oracle.dense_eigensystem";
  r["half_size"] = sys.half_size;
  r["theta"] = sys.theta;
  r["norm_bound"] = sys.norm_bound;
  r["count"] = sys.eig.values.size();
  r["values"] = sys.eig.values;
  return wrap(c, "oracle", std::move(r));
}

ReportResult oracle_csv(const RunConfig& c) {
  const Potential v = c.potential.realize();
  const Frequency freq = c.alpha.realize();
  FiniteEigensystem sys = dense_eigensystem(v, c.lambda, freq.alpha(),
                                            c.theta, c.n_max);
  std::ostringstream out;
  out << "index,energy,peak_site,mass_01,spread\n";
  for (std::size_t k = 0; k < sys.eig.values.size(); ++k) {
    MassProfile mp = mass_profile(sys.eig.vectors[k], sys.half_size);
    out << k << ',' << format_number(sys.eig.values[k]) << ',' << mp.peak_site
        << ',' << format_number(mp.mass_01) << ',' << format_number(mp.spread)
        << '\n';
  }
  return {out.str(), 0};
}

} // namespace qpl
