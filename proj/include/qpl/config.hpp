#pragma once
// Run configuration for the CLI: one JSON document with flag overrides.
// Parsing is strict (unknown keys are errors, naming the offending field)
// and serialization is lossless: numbers are emitted in shortest
// round-trip form, so parse(dump(c)) reproduces every field bitwise.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpl/arithmetic.hpp"
#include "qpl/eigen.hpp"
#include "qpl/induction.hpp"
#include "qpl/lmeasure.hpp"
#include "qpl/potential.hpp"

namespace qpl {

// ---- sub-specs -------------------------------------------------------------

// {"type":"golden"} | {"type":"value","x":0.61803} | {"type":"rational","p":233,"q":377}
struct FrequencySpec {
  std::string type = "golden";
  double x = 0.0;            // value kind
  std::int64_t p = 0, q = 0; // rational kind
  int depth = 40;            // continued-fraction depth

  Frequency realize() const;
};

// {"type":"amo"} | {"type":"trig","cos_coeffs":[...],"mean":0}
// | {"type":"tabulated","samples":[...]}
struct PotentialSpec {
  std::string type = "amo";
  std::vector<double> cos_coeffs; // trig kind
  double mean = 0.0;              // trig kind
  std::vector<double> samples;    // tabulated kind

  Potential realize() const;
};

struct OutputSpec {
  std::string path;             // empty = stdout
  std::string format = "json";  // "json" | "csv"
};

// ---- run configuration -----------------------------------------------------

struct RunConfig {
  double lambda = 10.0;
  double theta = 0.25;
  std::optional<double> t;      // scaled energy E / lambda (induct)

  FrequencySpec alpha;
  PotentialSpec potential;
  DiophantineParams dc{0.05, 2.0, 100000};

  double epsilon = 0.1;         // growth floor 1 - epsilon in estimate checks
  int scales = 3;               // induction scales to build past the seed
  int n_max = 150;              // eigenfunction / oracle half window
  int half_count = 6;           // completeness window N (entries -N..N)
  std::uint64_t seed = 1;       // randomized property suites

  InductionOptions induction{1.06, -1, 5};
  EigenOptions eigen;           // n_max above overrides eigen.n_max
  MeasureOptions measure;       // half_count / dc above override

  OutputSpec output;

  // Derived views with the cross-field overrides applied.
  EigenOptions eigen_options() const;
  MeasureOptions measure_options() const;
  EstimateOptions estimate_options() const;
};

// Strict parse + validate. Errors are ConfigError naming the field.
RunConfig config_from_json(const std::string& text);
// Lossless serialization (2-space indent, sorted keys, trailing newline).
std::string config_to_json(const RunConfig& config);

RunConfig load_config(const std::string& path);

// Field-by-field range checks; throws ConfigError naming the first
// offending field. config_from_json calls this; flag overrides re-validate.
void validate_config(const RunConfig& config);

} // namespace qpl
