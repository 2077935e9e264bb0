#include <cmath>
#include <cstdlib>

#include "doctest.h"

#include "qpl/config.hpp"
#include "qpl/kernel.hpp"
#include "qpl/reports.hpp"

using namespace qpl;

namespace {

bool mentions(const Error& e, const char* needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("default config round-trips byte-identically") {
  RunConfig c;
  const std::string once = config_to_json(c);
  RunConfig back = config_from_json(once);
  const std::string twice = config_to_json(back);
  CHECK(once == twice);
  CHECK(back.lambda == c.lambda);
  CHECK(back.theta == c.theta);
  CHECK(back.alpha.type == "golden");
  CHECK(back.potential.type == "amo");
  CHECK(back.induction.tau == c.induction.tau);
  CHECK(back.eigen.phase_tol == c.eigen.phase_tol);
  CHECK(back.output.format == "json");
  CHECK_FALSE(back.t.has_value());
}

TEST_CASE("non-representable decimals survive the round trip bitwise") {
  RunConfig c;
  c.lambda = 0.1;
  c.theta = 0.041326649821088038;
  c.t = 1.0 / 3.0;
  c.epsilon = 0.30000000000000004;
  c.eigen.phase_tol = 1e-300;
  c.eigen.t_floor = 4.9406564584124654e-324; // denormal minimum
  c.measure.tail_rate = -1.1513352238890774;
  c.seed = 18446744073709551615ULL;
  c.alpha = FrequencySpec{"value", 0.7548776662466927, 0, 0, 37};
  c.potential = PotentialSpec{"trig", {2.0, 0.3, -0.05}, 0.125, {}};

  RunConfig back = config_from_json(config_to_json(c));
  CHECK(back.lambda == c.lambda);
  CHECK(back.theta == c.theta);
  CHECK(back.t.has_value());
  CHECK(*back.t == *c.t);
  CHECK(back.epsilon == c.epsilon);
  CHECK(back.eigen.phase_tol == c.eigen.phase_tol);
  CHECK(back.eigen.t_floor == c.eigen.t_floor);
  CHECK(back.measure.tail_rate == c.measure.tail_rate);
  CHECK(back.seed == c.seed);
  CHECK(back.alpha.x == c.alpha.x);
  CHECK(back.potential.cos_coeffs == c.potential.cos_coeffs);
  CHECK(back.potential.mean == c.potential.mean);
  CHECK(config_to_json(back) == config_to_json(c));
}

TEST_CASE("unknown and malformed fields name themselves") {
  CHECK_THROWS_WITH_AS(config_from_json("{\"lambd\": 10}"),
                       doctest::Contains("lambd"), Error);
  CHECK_THROWS_WITH_AS(config_from_json("{\"eigen\": {\"phase_tl\": 1}}"),
                       doctest::Contains("eigen.phase_tl"), Error);
  CHECK_THROWS_WITH_AS(config_from_json("{\"lambda\": \"ten\"}"),
                       doctest::Contains("must be a number"), Error);
  CHECK_THROWS_WITH_AS(config_from_json("not json"),
                       doctest::Contains("not valid JSON"), Error);

  try {
    config_from_json("{\"lambd\": 10}");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}

TEST_CASE("tau at or below one is rejected by name") {
  try {
    config_from_json("{\"induction\": {\"tau\": 1.0}}");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(mentions(e, "tau"));
    CHECK(mentions(e, "induction.tau"));
  }
  try {
    config_from_json("{\"dc\": {\"tau\": 0.5}}");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(mentions(e, "dc.tau"));
  }
}

TEST_CASE("range validation names the offending field") {
  auto expect_field = [](const char* text, const char* field) {
    try {
      config_from_json(text);
      CHECK(false);
    } catch (const Error& e) {
      CAPTURE(text);
      CHECK(e.code() == ErrorCode::ConfigError);
      CHECK(mentions(e, field));
    }
  };
  expect_field("{\"lambda\": -1}", "lambda");
  expect_field("{\"alpha\": {\"type\": \"vaalue\"}}", "alpha.type");
  expect_field("{\"alpha\": {\"type\": \"value\", \"x\": 1.5}}", "alpha.x");
  expect_field("{\"alpha\": {\"type\": \"rational\", \"p\": 5, \"q\": 3}}", "alpha.p");
  expect_field("{\"potential\": {\"type\": \"trig\"}}", "potential.cos_coeffs");
  expect_field("{\"potential\": {\"type\": \"tabulated\", \"samples\": [1, 2]}}",
               "potential.samples");
  expect_field("{\"dc\": {\"gamma\": 0.0}}", "dc.gamma");
  expect_field("{\"epsilon\": 1.0}", "epsilon");
  expect_field("{\"scales\": 0}", "scales");
  expect_field("{\"n_max\": 5}", "n_max");
  expect_field("{\"half_count\": 101}", "half_count");
  expect_field("{\"eigen\": {\"schedule\": [8, 8]}}", "eigen.schedule");
  expect_field("{\"output\": {\"format\": \"xml\"}}", "output.format");
}

TEST_CASE("frequency and potential specs realize the right objects") {
  RunConfig c = config_from_json(
      "{\"alpha\": {\"type\": \"rational\", \"p\": 233, \"q\": 377}}");
  Frequency f = c.alpha.realize();
  CHECK(f.rational);
  CHECK(f.q.back() == 377);
  CHECK(static_cast<double>(f.value) == doctest::Approx(233.0 / 377.0).epsilon(1e-15));

  Frequency g = RunConfig{}.alpha.realize();
  REQUIRE(g.q.size() >= 10);
  CHECK(g.q[0] == 1);
  CHECK(g.q[1] == 2);
  CHECK(g.q[9] == 89); // Fibonacci

  RunConfig p = config_from_json(
      "{\"potential\": {\"type\": \"trig\", \"cos_coeffs\": [2.0, 0.3]}}");
  Potential v = p.potential.realize();
  CHECK(v(0.0) == doctest::Approx(2.3).epsilon(1e-15));
  CHECK(v(0.5) == doctest::Approx(-1.7).epsilon(1e-12));
}

TEST_CASE("derived option views apply the cross-field overrides") {
  RunConfig c = config_from_json(
      "{\"n_max\": 96, \"half_count\": 9,"
      " \"induction\": {\"tau\": 1.25, \"min_base_q\": 7},"
      " \"dc\": {\"gamma\": 0.02, \"tau\": 2.5, \"kmax\": 500}}");
  EigenOptions eo = c.eigen_options();
  CHECK(eo.n_max == 96);
  CHECK(eo.induction.tau == 1.25);
  CHECK(eo.induction.min_base_q == 7);
  REQUIRE(eo.phase_class.has_value());
  CHECK(eo.phase_class->gamma == 0.02);
  CHECK(eo.phase_class->kmax == 500);

  MeasureOptions mo = c.measure_options();
  CHECK(mo.half_count == 9);
  CHECK(mo.eigen.n_max == 96);
  REQUIRE(mo.phase_class.has_value());
  CHECK(mo.phase_class->tau == 2.5);
  // Entries visit orbit phases in weaker classes; no per-entry gate.
  CHECK_FALSE(mo.eigen.phase_class.has_value());

  CHECK(c.estimate_options().growth_floor == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("report preconditions surface as config errors") {
  RunConfig c;
  CHECK_THROWS_WITH_AS(induct_report(c), doctest::Contains("\"t\""), Error);
}

TEST_CASE("oracle csv has the documented columns and is deterministic") {
  RunConfig c;
  c.n_max = 10;
  ReportResult first = oracle_csv(c);
  ReportResult second = oracle_csv(c);
  CHECK(first.text == second.text);
  CHECK(first.text.rfind("index,energy,peak_site,mass_01,spread\n", 0) == 0);
  // 2 * 10 + 1 rows plus the header.
  std::size_t lines = 0;
  for (char ch : first.text) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 22);
}

TEST_CASE("thread count splitting is bitwise invisible") {
  Potential v = Potential::amo();
  CocycleRequest req;
  req.lambda = 3.0;
  req.alpha = Frequency::golden(40).alpha();
  req.steps = {5, 17, 33};
  std::vector<CocycleLane> lanes;
  for (int k = 0; k < 7; ++k)
    lanes.push_back({0.1 + 0.09 * k, 0.3 * k - 1.0});

  unsetenv("QPL_THREADS");
  CHECK(kernel_thread_count() == 1);
  auto base = run_cocycle_batch(v, req, lanes);

  setenv("QPL_THREADS", "3", 1);
  CHECK(kernel_thread_count() == 3);
  auto split = run_cocycle_batch(v, req, lanes);

  setenv("QPL_THREADS", "0", 1);
  CHECK(kernel_thread_count() == 1); // out of range falls back
  unsetenv("QPL_THREADS");

  REQUIRE(split.size() == base.size());
  for (std::size_t l = 0; l < base.size(); ++l) {
    REQUIRE(split[l].size() == base[l].size());
    for (std::size_t s = 0; s < base[l].size(); ++s) {
      CHECK(split[l][s].core.a == base[l][s].core.a);
      CHECK(split[l][s].core.b == base[l][s].core.b);
      CHECK(split[l][s].core.c == base[l][s].core.c);
      CHECK(split[l][s].core.d == base[l][s].core.d);
      CHECK(split[l][s].exp2 == base[l][s].exp2);
    }
  }
}
