#include <doctest.h>

#include <cmath>

#include "sqz/errors.hpp"
#include "sqz/units.hpp"

using namespace sqz;

TEST_CASE("decibel conversion examples") {
  CHECK(to_decibels(1.0) == 0.0);
  CHECK(to_decibels(0.5) == doctest::Approx(-3.0103).epsilon(1e-5));
  CHECK(to_decibels(std::pow(10.0, -0.38)) == doctest::Approx(-3.8).epsilon(1e-12));
  CHECK(from_decibels(-3.8).linear() == doctest::Approx(0.4169).epsilon(1e-4));
  CHECK(RelativeNoisePower(2.0).decibels() == doctest::Approx(3.0103).epsilon(1e-5));
}

TEST_CASE("decibel round trip over +-60 dB") {
  for (int i = -6000; i <= 6000; ++i) {
    const double d = i * 0.01;
    CHECK(std::abs(to_decibels(from_decibels(d)) - d) < 1e-10);
  }
  for (double v : {1e-6, 0.1202, 0.4169, 1.0, 2.73, 1e6})
    CHECK(std::abs(from_decibels(to_decibels(v)).linear() / v - 1.0) < 1e-12);
}

TEST_CASE("non-positive noise power is a domain error") {
  for (double v : {0.0, -0.5, std::nan("")}) {
    try {
      (void)to_decibels(v);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::domain);
    }
  }
  CHECK_THROWS_AS(RelativeNoisePower(-1.0), Error);
}

TEST_CASE("optical field carrier frequency") {
  const OpticalFieldSpec f(1064e-9, 1.1);
  const double expected = 2.0 * 3.14159265358979323846 * 299792458.0 / 1064e-9;
  CHECK(std::abs(f.carrier_frequency() / expected - 1.0) < 1e-12);
  const auto h = f.harmonic(0.32);
  CHECK(h.wavelength() == doctest::Approx(532e-9).epsilon(1e-15));
  CHECK(h.power() == 0.32);
  CHECK(std::abs(h.carrier_frequency() / (2.0 * expected) - 1.0) < 1e-12);
  CHECK_THROWS_AS(OpticalFieldSpec(0.0, 1.0), Error);
  CHECK_THROWS_AS(OpticalFieldSpec(1064e-9, -1.0), Error);
}

TEST_CASE("celsius conversion") {
  const Celsius t{33.5};
  CHECK(t.kelvin() == doctest::Approx(306.65));
  CHECK(Celsius{40.0} - Celsius{25.0} == 15.0);
}

TEST_CASE("error kind names") {
  CHECK(std::string(to_string(ErrorKind::identifiability)) == "identifiability");
  const ParseError p("x.ini", 7, "bad");
  CHECK(p.line() == 7);
  CHECK(std::string(p.what()).find("x.ini:7") != std::string::npos);
  const ValidationError v({"a", "b"});
  CHECK(v.violations().size() == 2);
  CHECK(v.kind() == ErrorKind::validation);
}
