#pragma once

#include <numbers>

namespace sqz {

inline constexpr double speed_of_light = 299792458.0;       // m/s
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double pi = std::numbers::pi;
inline constexpr double kelvin_offset = 273.15;

// Temperature as quoted at interfaces. Differences are kelvin.
struct Celsius {
  double value = 0.0;

  constexpr double kelvin() const { return value + kelvin_offset; }
  friend constexpr double operator-(Celsius a, Celsius b) { return a.value - b.value; }
  friend constexpr bool operator==(Celsius, Celsius) = default;
};

// A monochromatic beam: vacuum wavelength, angular carrier frequency, power.
class OpticalFieldSpec {
 public:
  OpticalFieldSpec(double wavelength_vacuum_m, double power_w);

  double wavelength() const { return wavelength_; }
  double carrier_frequency() const { return carrier_frequency_; }
  double power() const { return power_; }

  // Second harmonic of this field with the given power.
  OpticalFieldSpec harmonic(double power_w) const;

  friend bool operator==(const OpticalFieldSpec&, const OpticalFieldSpec&) = default;

 private:
  double wavelength_;
  double carrier_frequency_;
  double power_;
};

// Quadrature variance relative to shot noise (1.0 = shot noise).
class RelativeNoisePower {
 public:
  explicit RelativeNoisePower(double linear_value);

  double linear() const { return value_; }
  double decibels() const;

  friend bool operator==(RelativeNoisePower, RelativeNoisePower) = default;
  friend auto operator<=>(RelativeNoisePower, RelativeNoisePower) = default;

 private:
  double value_;
};

double to_decibels(RelativeNoisePower v);
double to_decibels(double linear_value);
RelativeNoisePower from_decibels(double db);

}  // namespace sqz
