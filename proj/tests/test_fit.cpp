#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sqz/errors.hpp"
#include "sqz/fit.hpp"
#include "sqz/measurement.hpp"
#include "sqz/quantum_noise.hpp"
#include "support.hpp"

using namespace sqz;

namespace {

double bisect_x(double eta, double target) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (eta * 4.0 * m / ((1.0 + m) * (1.0 + m)) < target ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

std::vector<NoiseTrace> synthetic(const BenchConfig& truth, bool with_anti) {
  const auto f = log_spaced(100.0, 300e6, 160);
  std::vector<NoiseTrace> out{detected_spectrum(truth, f).subtracted};
  if (with_anti) out.push_back(detected_spectrum(truth, f, pi / 2).subtracted);
  return out;
}

FitProblem problem(const BenchConfig& start, std::vector<NoiseTrace> observed, const std::vector<std::string>& names) {
  FitProblem p;
  p.observed = std::move(observed);
  p.fixed = start;
  for (const auto& n : names) p.free_parameters.push_back(default_bound(n));
  p.seed = 1;
  return p;
}

}  // namespace

TEST_CASE("pump parameter from the squeezing level") {
  const double s = 1.0 - std::pow(10.0, -0.38);
  const double x = infer_pump_parameter(3.8, 0.88);
  CHECK(x == doctest::Approx(bisect_x(0.88, s)).epsilon(1e-12));
  CHECK(x == doctest::Approx(0.265).epsilon(2e-3));
  CHECK(0.88 * 4.0 * x / ((1.0 + x) * (1.0 + x)) == doctest::Approx(s).epsilon(1e-12));
  CHECK(infer_pump_parameter(-3.8, 0.88) == x);
  CHECK(infer_pump_parameter(0.0, 0.5) == 0.0);
  CHECK(infer_pump_parameter(0.0, 1.0) == 0.0);
}

TEST_CASE("pump parameter boundary infeasibility") {
  const double boundary = 1.0 - std::pow(10.0, -0.38);
  CHECK(boundary == doctest::Approx(0.5831).epsilon(1e-4));
  try {
    (void)infer_pump_parameter(3.8, 0.583);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
    CHECK(std::string(e.what()).find("maximum is 3.7") != std::string::npos);
  }
  CHECK(infer_pump_parameter(3.8, 0.584) < 1.0);
  CHECK_THROWS_AS((void)infer_pump_parameter(3.0, 0.0), Error);
  CHECK_THROWS_AS((void)infer_pump_parameter(3.0, 1.2), Error);
}

TEST_CASE("pump inference inverts the low-frequency variance") {
  for (double eta : {0.5, 0.85, 1.0})
    for (double x = 0.05; x <= 0.9 + 1e-12; x += 0.01) {
      SqueezerOperatingPoint op;
      op.pump_parameter = x;
      op.decay_rate = 1e8;
      const double db = quadrature_variances(op, eta, 0.0).minus.decibels();
      CHECK(std::abs(infer_pump_parameter(db, eta) - x) < 1e-8);
    }
}

TEST_CASE("single free parameter fit matches the inference") {
  BenchConfig b = test::paper_bench();
  b.detection.scatter.amplitude = 0.0;
  b.operating_point.squeeze_angle_rms_jitter = 0.0;
  BenchConfig truth = b;
  truth.operating_point.pump_parameter = 0.31;
  const std::vector<double> f = log_spaced(10e3, 200e3, 40);
  const auto obs = detected_spectrum(truth, f).subtracted;
  b.operating_point.pump_parameter = 0.1;
  const auto r = fit_spectrum(problem(b, {obs}, {"pump_parameter"}));
  const double db = test::db(quadrature_variances(truth.operating_point, truth.detection.total_efficiency(), 0.0).minus.linear());
  CHECK(std::abs(r.value("pump_parameter") - infer_pump_parameter(db, truth.detection.total_efficiency())) < 1e-4);
  CHECK(r.converged);
}

TEST_CASE("shot-noise observations give no pump") {
  BenchConfig b = test::paper_bench();
  b.detection.scatter.amplitude = 0.0;
  NoiseTrace t;
  t.kind = TraceKind::squeezed_subtracted;
  t.axis = log_spaced(1e3, 1e6, 40);
  t.values.assign(t.axis.size(), 1.0);
  const auto r = fit_spectrum(problem(b, {t}, {"pump_parameter"}));
  CHECK(r.value("pump_parameter") < 1e-3);
}

TEST_CASE("pump and efficiency need an anti-squeezed trace") {
  const auto& b = test::paper_bench();
  try {
    (void)fit_spectrum(problem(b, synthetic(b, false), {"pump_parameter", "escape_efficiency"}));
    FAIL("expected an identifiability error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::identifiability);
  }
}

TEST_CASE("five-parameter round trip") {
  BenchConfig truth = test::paper_bench();
  apply_parameter(truth, "pump_parameter", 0.3);
  apply_parameter(truth, "escape_efficiency", 0.93);
  apply_parameter(truth, "squeeze_angle_rms_jitter", 0.05);
  apply_parameter(truth, "scatter_amplitude", 0.2);
  apply_parameter(truth, "scatter_exponent", 2.5);
  const std::vector<std::string> names{"pump_parameter", "escape_efficiency", "squeeze_angle_rms_jitter",
                                       "scatter_amplitude", "scatter_exponent"};
  const auto r = fit_spectrum(problem(test::paper_bench(), synthetic(truth, true), names));
  CHECK(r.converged);
  for (const auto& n : names) CHECK(r.value(n) == doctest::Approx(get_parameter(truth, n)).epsilon(0.01));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto bound = default_bound(names[i]);
    CHECK(r.best_values[i].second >= bound.lower);
    CHECK(r.best_values[i].second <= bound.upper);
  }
  CHECK(std::isfinite(r.objective));
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  CHECK(r.history.size() > 1);
  CHECK(r.fitted.operating_point.pump_parameter == r.value("pump_parameter"));
  CHECK(r.residual_traces.size() == 2);
}

TEST_CASE("fit is deterministic for a seed") {
  const auto& b = test::paper_bench();
  const auto p = problem(b, synthetic(b, true), {"pump_parameter", "scatter_amplitude"});
  const auto a = fit_spectrum(p);
  const auto c = fit_spectrum(p);
  CHECK(a.best_values == c.best_values);
  CHECK(a.objective == c.objective);
}

TEST_CASE("fit problem validation") {
  const auto& b = test::paper_bench();
  auto p = problem(b, {}, {});
  CHECK(p.violations().size() >= 2);
  CHECK_THROWS_AS((void)fit_spectrum(p), ValidationError);
  p = problem(b, synthetic(b, false), {"pump_parameter", "pump_parameter"});
  CHECK_FALSE(p.violations().empty());
  p.free_parameters = {{"pump_parameter", 0.0, 1.5}};
  CHECK_FALSE(p.violations().empty());
  CHECK_THROWS_AS((void)default_bound("colour"), Error);
}

TEST_CASE("parameter bound parsing") {
  const auto a = parse_parameter_bound("pump_parameter");
  CHECK(a.lower == 0.0);
  CHECK(a.upper == 0.999);
  const auto b = parse_parameter_bound("scatter_amplitude:0.01:1");
  CHECK(b.lower == 0.01);
  CHECK(b.upper == 1.0);
  CHECK_THROWS_AS((void)parse_parameter_bound("scatter_amplitude:x:1"), Error);
  CHECK_THROWS_AS((void)parse_parameter_bound("scatter_amplitude:1"), Error);
}

TEST_CASE("fit report shape") {
  const auto& b = test::paper_bench();
  const auto p = problem(b, synthetic(b, false), {"scatter_amplitude"});
  const auto r = fit_spectrum(p);
  std::ostringstream out;
  write_fit_report(out, p, r);
  CHECK(out.str().find("[best_values]") != std::string::npos);
  CHECK(out.str().find("scatter_amplitude = ") != std::string::npos);
}

TEST_CASE("loss budget of a lossless chain is capped") {
  BenchConfig b = test::paper_bench();
  b.detection.escape_efficiency = b.detection.propagation_efficiency = 1.0;
  b.detection.homodyne_efficiency = b.detection.quantum_efficiency = 1.0;
  const auto lb = loss_budget(b);
  CHECK(lb.rows.back().capped);
  CHECK(lb.rows.back().max_squeezing_db > 60.0);
}

TEST_CASE("loss budget from the two detector efficiencies") {
  BenchConfig b = test::paper_bench();
  b.detection.escape_efficiency = b.detection.propagation_efficiency = 1.0;
  const auto lb = loss_budget(b);
  CHECK(lb.rows.back().max_squeezing_db == doctest::Approx(-10.0 * std::log10(1.0 - 0.99 * 0.93)).epsilon(1e-12));
  CHECK(lb.rows.back().max_squeezing_db == doctest::Approx(11.0).epsilon(0.01));
}

TEST_CASE("loss budget for the bench") {
  const auto& b = test::paper_bench();
  const auto lb = loss_budget(b);
  REQUIRE(lb.rows.size() == 4);
  CHECK(lb.rows.back().max_squeezing_db >= 3.8);
  CHECK(lb.rows.back().pump_parameter_for_target.has_value());
  double product = 1.0;
  for (const auto& r : lb.rows) product *= r.efficiency;
  CHECK(std::abs(product - lb.total_efficiency) < 1e-12);
  CHECK(std::abs(lb.rows.back().cumulative_efficiency - lb.total_efficiency) < 1e-12);
  for (std::size_t i = 1; i < lb.rows.size(); ++i)
    CHECK(lb.rows[i].max_squeezing_db <= lb.rows[i - 1].max_squeezing_db);
  const auto hard = loss_budget(b, 20.0);
  CHECK_FALSE(hard.rows.back().pump_parameter_for_target.has_value());
}

TEST_CASE("parameter access and names") {
  BenchConfig b = test::paper_bench();
  for (const auto& n : fit_parameter_names()) {
    const double v = get_parameter(b, n);
    apply_parameter(b, n, v);
    CHECK(get_parameter(b, n) == v);
  }
  apply_parameter(b, "scatter_amplitude", 0.5);
  CHECK(b.detection.scatter.amplitude == 0.5);
  CHECK(b.document.find("detection", "scatter_amplitude")->value == "0.5");
  CHECK_THROWS_AS((void)get_parameter(b, "colour"), Error);
}
