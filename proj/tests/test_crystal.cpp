#include <doctest.h>

#include <cmath>

#include "sqz/crystal.hpp"
#include "sqz/errors.hpp"
#include "support.hpp"

using namespace sqz;

namespace {

const OpticalFieldSpec pump{1064e-9, 0.0};

CrystalSpec ppktp() { return test::paper_bench().opo_cavity.crystal; }

// Hand evaluation of the shipped n_z fit, coefficients copied from the dataset file.
double ktp_nz_oracle(double lambda_um, double t_c) {
  const double l2 = lambda_um * lambda_um;
  const double n0 = std::sqrt(4.59423 + 0.06206 / (l2 - 0.04763) + 110.80672 / (l2 - 86.12171));
  const double l = lambda_um;
  const double dndt = (0.9221 / (l * l * l) - 2.9220 / (l * l) + 3.6677 / l - 0.1897) * 1e-5;
  return n0 + dndt * (t_c - 20.0);
}

// Brute-force zero crossing of the mismatch over a period grid.
double period_scan_oracle(CrystalSpec c, Celsius t, double lo, double hi, double step) {
  double prev = 0.0;
  for (double p = lo; p <= hi; p += step) {
    c.poling_period_at_ref = p;
    const double dk = qpm_mismatch(c, pump, t);
    if (p > lo && (dk > 0.0) != (prev > 0.0)) return p - 0.5 * step;
    prev = dk;
  }
  return 0.0;
}

CrystalSpec with_length(double l) {
  auto c = ppktp();
  c.length = l;
  return c;
}

}  // namespace

TEST_CASE("PPKTP index matches hand-evaluated Sellmeier") {
  const auto c = ppktp();
  const double n1 = refractive_index(c, 1064e-9, Celsius{33.5});
  CHECK(n1 == doctest::Approx(ktp_nz_oracle(1.064, 33.5)).epsilon(1e-12));
  CHECK(n1 == doctest::Approx(1.82986).epsilon(1e-5));
  const double n2 = refractive_index(c, 532e-9, Celsius{33.5});
  CHECK(n2 == doctest::Approx(ktp_nz_oracle(0.532, 33.5)).epsilon(1e-12));
  CHECK(n2 > n1);
}

TEST_CASE("index evaluation is pure") {
  const auto c = ppktp();
  const double a = refractive_index(c, 800e-9, Celsius{47.0});
  for (int i = 0; i < 10; ++i) CHECK(refractive_index(c, 800e-9, Celsius{47.0}) == a);
}

TEST_CASE("index outside the dataset range is a range error") {
  const auto c = ppktp();
  try {
    (void)refractive_index(c, 2000e-9, Celsius{33.5});
    FAIL("expected a range error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::range);
    CHECK(std::string(e.what()).find("ppktp_z") != std::string::npos);
  }
  CHECK_THROWS_AS((void)refractive_index(c, 1064e-9, Celsius{400.0}), Error);
}

TEST_CASE("poling period for 1064 nm at 33.5 C") {
  const auto c = ppktp();
  const double period = solve_poling_period(c, pump, Celsius{33.5});
  CHECK(period == doctest::Approx(9.0e-6).epsilon(0.03));
  const double oracle = period_scan_oracle(c, Celsius{33.5}, 5e-6, 15e-6, 1e-10);
  CHECK(std::abs(period - oracle) < 1e-10);

  auto solved = c;
  solved.poling_period_at_ref = period;
  CHECK(std::abs(qpm_mismatch(solved, pump, Celsius{33.5})) < 1e-6);
}

TEST_CASE("poling period at two targets follows dispersion and expansion") {
  const auto c = ppktp();
  const double p25 = solve_poling_period(c, pump, Celsius{25.0});
  const double p40 = solve_poling_period(c, pump, Celsius{40.0});
  // two direct evaluations: grating vector equals the material mismatch, stretched back to T_ref
  auto oracle = [&](double t) {
    const double dk = material_mismatch(c, pump, Celsius{t});
    return 2.0 * pi / dk / (1.0 + c.thermal_expansion_coeff * (t - c.reference_temperature.value));
  };
  CHECK(p25 == doctest::Approx(oracle(25.0)).epsilon(1e-12));
  CHECK(p40 == doctest::Approx(oracle(40.0)).epsilon(1e-12));
  const double diff = p25 - p40;
  CHECK(diff > 0.0);
  CHECK(diff / p25 < 1e-2);
}

TEST_CASE("mismatch is monotone near the matched temperature") {
  const auto c = ppktp();
  double prev = qpm_mismatch(c, pump, Celsius{30.5});
  int sign = 0;
  for (int i = 1; i <= 60; ++i) {
    const double dk = qpm_mismatch(c, pump, Celsius{30.5 + 0.1 * i});
    const int s = dk > prev ? 1 : -1;
    if (sign == 0) sign = s;
    CHECK(s == sign);
    prev = dk;
  }
}

TEST_CASE("doubling the period increases the mismatch") {
  auto c = ppktp();
  const double matched = std::abs(qpm_mismatch(c, pump, Celsius{33.5}));
  c.poling_period_at_ref = *c.poling_period_at_ref * 2.0;
  CHECK(std::abs(qpm_mismatch(c, pump, Celsius{33.5})) > matched + 1e5);
}

TEST_CASE("quasi phase matching without a period is a configuration error") {
  auto c = ppktp();
  c.poling_period_at_ref.reset();
  try {
    (void)qpm_mismatch(c, pump, Celsius{33.5});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::configuration);
  }
}

TEST_CASE("PPKTP tuning curve") {
  const auto c = ppktp();
  const auto curve = tuning_curve(c, pump, Celsius{18.5}, Celsius{48.5}, 401);
  CHECK(curve.fwhm >= 2.5);
  CHECK(curve.fwhm <= 10.0);
  CHECK(std::abs(curve.center_temperature.value - 33.5) < 2e-3);
  CHECK(phase_matching_efficiency(c, pump, curve.center_temperature) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(curve.lower_half_max.value < curve.center_temperature.value);
  CHECK(curve.upper_half_max.value > curve.center_temperature.value);
  REQUIRE(curve.temperatures.size() == curve.normalized_efficiency.size());
  for (std::size_t i = 0; i < curve.temperatures.size(); ++i) {
    const double e = curve.normalized_efficiency[i];
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
    const double dk = phase_mismatch(c, pump, Celsius{curve.temperatures[i]});
    if (e == 1.0) CHECK(std::abs(dk * c.length / 2.0) < 1e-7);
    if (i > 0) CHECK(curve.temperatures[i] > curve.temperatures[i - 1]);
  }
  CHECK(phase_matching_efficiency(c, pump, curve.lower_half_max) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(phase_matching_efficiency(c, pump, curve.upper_half_max) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("tuning bandwidth scales inversely with length") {
  std::vector<double> widths;
  for (double l : {5e-3, 10e-3, 20e-3}) {
    const auto curve = tuning_curve(with_length(l), pump, Celsius{8.5}, Celsius{58.5}, 801);
    widths.push_back(curve.fwhm * l);
  }
  CHECK(widths[0] / widths[1] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(widths[2] / widths[1] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("tuning curve argument errors") {
  const auto c = ppktp();
  CHECK_THROWS_AS((void)tuning_curve(c, pump, Celsius{18.5}, Celsius{48.5}, 8), Error);
  CHECK_THROWS_AS((void)tuning_curve(c, pump, Celsius{48.5}, Celsius{18.5}, 100), Error);
  try {
    (void)tuning_curve(c, pump, Celsius{33.0}, Celsius{34.0}, 100);
    FAIL("expected a range complaint");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::argument);
  }
  try {
    (void)tuning_curve(c, pump, Celsius{60.0}, Celsius{80.0}, 100);
    FAIL("expected a bracket complaint");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bracket") != std::string::npos);
  }
}

TEST_CASE("type-I lithium niobate is phase matched near its oven set point") {
  const auto& shg = test::paper_bench().shg_cavity.crystal;
  const auto t = phase_matched_temperature(shg, pump, Celsius{90.0}, Celsius{140.0});
  CHECK(t.value == doctest::Approx(114.05).epsilon(1e-3));
  const auto curve = tuning_curve(shg, pump, Celsius{104.05}, Celsius{124.05}, 401);
  CHECK(curve.fwhm > 0.5);
  CHECK(curve.fwhm < 2.0);
}

TEST_CASE("crystal violations") {
  auto c = ppktp();
  CHECK(c.violations().empty());
  c.length = -1.0;
  c.d_eff = 0.0;
  CHECK(c.violations().size() == 2);
}
