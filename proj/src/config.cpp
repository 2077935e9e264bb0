#include "qpl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qpl {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  fail(ErrorCode::ConfigError, "config field \"" + field + "\" " + why);
}

void check_finite(double x, const std::string& field) {
  if (!std::isfinite(x)) bad(field, "must be finite");
}

// ---- strict readers --------------------------------------------------------
// Every object is read key-by-key; unknown keys are errors so typos cannot
// silently fall back to defaults.

double read_number(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "must be a number");
  return j.get<double>();
}

std::int64_t read_integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "must be an integer");
  return j.get<std::int64_t>();
}

std::string read_string(const json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "must be a string");
  return j.get<std::string>();
}

std::vector<double> read_number_array(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(read_number(e, field));
  return out;
}

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) bad(field, "must be an object");
}

void read_alpha(const json& j, FrequencySpec& spec) {
  require_object(j, "alpha");
  for (const auto& [key, val] : j.items()) {
    const std::string field = "alpha." + key;
    if (key == "type") spec.type = read_string(val, field);
    else if (key == "x") spec.x = read_number(val, field);
    else if (key == "p") spec.p = read_integer(val, field);
    else if (key == "q") spec.q = read_integer(val, field);
    else if (key == "depth") spec.depth = static_cast<int>(read_integer(val, field));
    else bad(field, "is not a recognized field");
  }
}

void read_potential(const json& j, PotentialSpec& spec) {
  require_object(j, "potential");
  for (const auto& [key, val] : j.items()) {
    const std::string field = "potential." + key;
    if (key == "type") spec.type = read_string(val, field);
    else if (key == "cos_coeffs") spec.cos_coeffs = read_number_array(val, field);
    else if (key == "mean") spec.mean = read_number(val, field);
    else if (key == "samples") spec.samples = read_number_array(val, field);
    else bad(field, "is not a recognized field");
  }
}

void read_dc(const json& j, DiophantineParams& dc) {
  require_object(j, "dc");
  for (const auto& [key, val] : j.items()) {
    const std::string field = "dc." + key;
    if (key == "gamma") dc.gamma = read_number(val, field);
    else if (key == "tau") dc.tau = read_number(val, field);
    else if (key == "kmax") dc.kmax = read_integer(val, field);
    else bad(field, "is not a recognized field");
  }
}

void read_induction(const json& j, InductionOptions& opt) {
  require_object(j, "induction");
  for (const auto& [key, val] : j.items()) {
    const std::string field = "induction." + key;
    if (key == "tau") opt.tau = read_number(val, field);
    else if (key == "base_index") opt.n_base = static_cast<int>(read_integer(val, field));
    else if (key == "min_base_q") opt.min_base_q = read_integer(val, field);
    else bad(field, "is not a recognized field");
  }
}

void read_eigen(const json& j, EigenOptions& opt) {
  require_object(j, "eigen");
  for (const auto& [key, val] : j.items()) {
    const std::string field = "eigen." + key;
    if (key == "phase_tol") opt.phase_tol = read_number(val, field);
    else if (key == "t_floor") opt.t_floor = read_number(val, field);
    else if (key == "limit_tol") opt.limit_tol = read_number(val, field);
    else if (key == "max_scales") opt.max_scales = static_cast<int>(read_integer(val, field));
    else if (key == "gap_gate") opt.gap_gate = read_number(val, field);
    else if (key == "residual_scale") opt.residual_scale = read_number(val, field);
    else if (key == "goodness_fraction") opt.goodness_fraction = read_number(val, field);
    else if (key == "goodness_cap") opt.goodness_cap = read_number(val, field);
    else if (key == "schedule") {
      if (!val.is_array()) bad(field, "must be an array of integers");
      opt.schedule.clear();
      for (const auto& e : val) opt.schedule.push_back(read_integer(e, field));
    } else bad(field, "is not a recognized field");
  }
}

void read_measure(const json& j, MeasureOptions& opt) {
  require_object(j, "measure");
  for (const auto& [key, val] : j.items()) {
    const std::string field = "measure." + key;
    if (key == "distinct_tol") opt.distinct_tol = read_number(val, field);
    else if (key == "tail_constant") opt.tail_constant = read_number(val, field);
    else if (key == "tail_rate") opt.tail_rate = read_number(val, field);
    else bad(field, "is not a recognized field");
  }
}

void read_output(const json& j, OutputSpec& spec) {
  require_object(j, "output");
  for (const auto& [key, val] : j.items()) {
    const std::string field = "output." + key;
    if (key == "path") spec.path = read_string(val, field);
    else if (key == "format") spec.format = read_string(val, field);
    else bad(field, "is not a recognized field");
  }
}

// ---- emitters ---------------------------------------------------------------
// Emission is a pure function of the value so dump(parse(dump(c))) is
// byte-identical; keys come out sorted (json keeps objects ordered by key).

json emit_alpha(const FrequencySpec& s) {
  json j = {{"type", s.type}, {"depth", s.depth}};
  if (s.type == "value") j["x"] = s.x;
  if (s.type == "rational") {
    j["p"] = s.p;
    j["q"] = s.q;
  }
  return j;
}

json emit_potential(const PotentialSpec& s) {
  json j = {{"type", s.type}};
  if (s.type == "trig") {
    j["cos_coeffs"] = s.cos_coeffs;
    j["mean"] = s.mean;
  }
  if (s.type == "tabulated") j["samples"] = s.samples;
  return j;
}

} // namespace

// ---- spec realization --------------------------------------------------------

Frequency FrequencySpec::realize() const {
  if (type == "golden") return Frequency::golden(depth);
  if (type == "value") return Frequency::from_value(static_cast<long double>(x), depth);
  return Frequency::from_rational(p, q, depth);
}

Potential PotentialSpec::realize() const {
  if (type == "amo") return Potential::amo();
  if (type == "trig") return Potential::harmonics(cos_coeffs, mean);
  return Potential::tabulated(samples);
}

// ---- derived option views ------------------------------------------------------

EigenOptions RunConfig::eigen_options() const {
  EigenOptions opt = eigen;
  opt.n_max = n_max;
  opt.induction = induction;
  opt.phase_class = dc;
  return opt;
}

MeasureOptions RunConfig::measure_options() const {
  MeasureOptions opt = measure;
  opt.half_count = half_count;
  opt.phase_class = dc; // base-phase membership, recorded in the report
  opt.eigen = eigen_options();
  // Orbit phases theta + m alpha only lie in the weaker class with
  // gamma / (2|m|+1)^tau, so entries are not gated on the base class.
  opt.eigen.phase_class.reset();
  return opt;
}

EstimateOptions RunConfig::estimate_options() const {
  EstimateOptions opt;
  opt.growth_floor = 1.0 - epsilon;
  return opt;
}

// ---- parse / validate / serialize ----------------------------------------------

RunConfig config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    fail(ErrorCode::ConfigError, "config is not valid JSON");
  require_object(j, "(root)");

  RunConfig c;
  for (const auto& [key, val] : j.items()) {
    if (key == "lambda") c.lambda = read_number(val, key);
    else if (key == "theta") c.theta = read_number(val, key);
    else if (key == "t") c.t = read_number(val, key);
    else if (key == "alpha") read_alpha(val, c.alpha);
    else if (key == "potential") read_potential(val, c.potential);
    else if (key == "dc") read_dc(val, c.dc);
    else if (key == "epsilon") c.epsilon = read_number(val, key);
    else if (key == "scales") c.scales = static_cast<int>(read_integer(val, key));
    else if (key == "n_max") c.n_max = static_cast<int>(read_integer(val, key));
    else if (key == "half_count") c.half_count = static_cast<int>(read_integer(val, key));
    else if (key == "seed") {
      if (!val.is_number_integer()) bad(key, "must be an integer");
      c.seed = val.get<std::uint64_t>();
    } else if (key == "induction") read_induction(val, c.induction);
    else if (key == "eigen") read_eigen(val, c.eigen);
    else if (key == "measure") read_measure(val, c.measure);
    else if (key == "output") read_output(val, c.output);
    else bad(key, "is not a recognized field");
  }
  validate_config(c);
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["lambda"] = c.lambda;
  j["theta"] = c.theta;
  if (c.t) j["t"] = *c.t;
  j["alpha"] = emit_alpha(c.alpha);
  j["potential"] = emit_potential(c.potential);
  j["dc"] = {{"gamma", c.dc.gamma}, {"tau", c.dc.tau}, {"kmax", c.dc.kmax}};
  j["epsilon"] = c.epsilon;
  j["scales"] = c.scales;
  j["n_max"] = c.n_max;
  j["half_count"] = c.half_count;
  j["seed"] = c.seed;
  j["induction"] = {{"tau", c.induction.tau},
                    {"base_index", c.induction.n_base},
                    {"min_base_q", c.induction.min_base_q}};
  json e = {{"phase_tol", c.eigen.phase_tol},
            {"t_floor", c.eigen.t_floor},
            {"limit_tol", c.eigen.limit_tol},
            {"max_scales", c.eigen.max_scales},
            {"gap_gate", c.eigen.gap_gate},
            {"residual_scale", c.eigen.residual_scale},
            {"goodness_fraction", c.eigen.goodness_fraction},
            {"goodness_cap", c.eigen.goodness_cap}};
  if (!c.eigen.schedule.empty()) e["schedule"] = c.eigen.schedule;
  j["eigen"] = e;
  j["measure"] = {{"distinct_tol", c.measure.distinct_tol},
                  {"tail_constant", c.measure.tail_constant},
                  {"tail_rate", c.measure.tail_rate}};
  j["output"] = {{"path", c.output.path}, {"format", c.output.format}};
  return j.dump(2) + "\n";
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void validate_config(const RunConfig& c) {
  check_finite(c.lambda, "lambda");
  if (c.lambda < 0.0) bad("lambda", "must be >= 0");
  check_finite(c.theta, "theta");
  if (c.t) check_finite(*c.t, "t");

  if (c.alpha.type != "golden" && c.alpha.type != "value" && c.alpha.type != "rational")
    bad("alpha.type", "must be one of \"golden\", \"value\", \"rational\"");
  if (c.alpha.type == "value") {
    check_finite(c.alpha.x, "alpha.x");
    if (!(c.alpha.x > 0.0 && c.alpha.x < 1.0)) bad("alpha.x", "must lie in (0, 1)");
  }
  if (c.alpha.type == "rational") {
    if (c.alpha.q < 2) bad("alpha.q", "must be >= 2");
    if (c.alpha.p < 1 || c.alpha.p >= c.alpha.q) bad("alpha.p", "must satisfy 1 <= p < q");
  }
  if (c.alpha.depth < 1 || c.alpha.depth > 200) bad("alpha.depth", "must lie in [1, 200]");

  if (c.potential.type != "amo" && c.potential.type != "trig" &&
      c.potential.type != "tabulated")
    bad("potential.type", "must be one of \"amo\", \"trig\", \"tabulated\"");
  if (c.potential.type == "trig") {
    if (c.potential.cos_coeffs.empty()) bad("potential.cos_coeffs", "must be nonempty");
    for (double a : c.potential.cos_coeffs) check_finite(a, "potential.cos_coeffs");
    check_finite(c.potential.mean, "potential.mean");
  }
  if (c.potential.type == "tabulated") {
    if (c.potential.samples.size() < 4)
      bad("potential.samples", "must hold at least 4 samples");
    for (double s : c.potential.samples) check_finite(s, "potential.samples");
  }

  check_finite(c.dc.gamma, "dc.gamma");
  if (!(c.dc.gamma > 0.0 && c.dc.gamma <= 0.5)) bad("dc.gamma", "must lie in (0, 0.5]");
  check_finite(c.dc.tau, "dc.tau");
  if (!(c.dc.tau > 1.0)) bad("dc.tau", "must be > 1");
  if (c.dc.kmax < 1) bad("dc.kmax", "must be >= 1");

  check_finite(c.epsilon, "epsilon");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) bad("epsilon", "must lie in (0, 1)");
  if (c.scales < 1 || c.scales > 16) bad("scales", "must lie in [1, 16]");
  if (c.n_max < 8 || c.n_max > 20000) bad("n_max", "must lie in [8, 20000]");
  if (c.half_count < 0 || c.half_count > 100) bad("half_count", "must lie in [0, 100]");

  check_finite(c.induction.tau, "induction.tau");
  if (!(c.induction.tau > 1.0)) bad("induction.tau", "must be > 1");
  if (c.induction.n_base < -1) bad("induction.base_index", "must be >= -1");
  if (c.induction.min_base_q < 1) bad("induction.min_base_q", "must be >= 1");

  if (!(c.eigen.phase_tol > 0.0)) bad("eigen.phase_tol", "must be > 0");
  if (!(c.eigen.t_floor > 0.0)) bad("eigen.t_floor", "must be > 0");
  if (!(c.eigen.limit_tol > 0.0)) bad("eigen.limit_tol", "must be > 0");
  if (c.eigen.max_scales < 1 || c.eigen.max_scales > 16)
    bad("eigen.max_scales", "must lie in [1, 16]");
  if (!(c.eigen.gap_gate > 0.0)) bad("eigen.gap_gate", "must be > 0");
  if (!(c.eigen.residual_scale > 0.0)) bad("eigen.residual_scale", "must be > 0");
  if (!(c.eigen.goodness_fraction > 0.0 && c.eigen.goodness_fraction <= 1.0))
    bad("eigen.goodness_fraction", "must lie in (0, 1]");
  if (!(c.eigen.goodness_cap > 0.0)) bad("eigen.goodness_cap", "must be > 0");
  for (std::size_t k = 0; k < c.eigen.schedule.size(); ++k) {
    if (c.eigen.schedule[k] < 1 ||
        (k > 0 && c.eigen.schedule[k] <= c.eigen.schedule[k - 1]))
      bad("eigen.schedule", "must be strictly increasing depths >= 1");
  }

  if (!(c.measure.distinct_tol > 0.0)) bad("measure.distinct_tol", "must be > 0");
  if (!(c.measure.tail_constant > 0.0)) bad("measure.tail_constant", "must be > 0");
  check_finite(c.measure.tail_rate, "measure.tail_rate");

  if (c.output.format != "json" && c.output.format != "csv")
    bad("output.format", "must be \"json\" or \"csv\"");
}

} // namespace qpl
