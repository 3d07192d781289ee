#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sqz/dispersion.hpp"
#include "sqz/units.hpp"

namespace sqz {

enum class Material { ppktp, mgo_linbo3 };
enum class PhaseMatching {
  quasi,                 // periodic poling; both waves on the same axis
  birefringent_type_i,   // o + o -> e, no grating
};

const char* to_string(Material m);
const char* to_string(PhaseMatching p);

struct CrystalSpec {
  Material material = Material::ppktp;
  PhaseMatching phase_matching = PhaseMatching::quasi;
  double length = 0.0;                         // m
  std::optional<double> poling_period_at_ref;  // m, grating period at reference_temperature
  Celsius reference_temperature{25.0};
  double thermal_expansion_coeff = 0.0;  // 1/K, along the grating vector
  double d_eff = 0.0;                    // pm/V
  std::string sellmeier_table_ref;
  DispersionTable dispersion;  // harmonic axis; also the fundamental axis for quasi phase matching
  std::string fundamental_table_ref;
  std::optional<DispersionTable> fundamental_dispersion;  // ordinary axis for type I

  std::vector<std::string> violations(const std::string& prefix = "crystal") const;
  bool operator==(const CrystalSpec&) const = default;
};

struct TuningCurve {
  std::vector<double> temperatures;  // C
  std::vector<double> normalized_efficiency;
  double fwhm = 0.0;  // K
  Celsius center_temperature;
  Celsius lower_half_max;
  Celsius upper_half_max;
};

// Index of the crystal's primary dataset.
double refractive_index(const CrystalSpec& crystal, double wavelength_m, Celsius temperature);

// Index seen by the fundamental and by its harmonic.
double fundamental_index(const CrystalSpec& crystal, double wavelength_m, Celsius temperature);
double harmonic_index(const CrystalSpec& crystal, double wavelength_m, Celsius temperature);

// k(2w) - 2k(w), without any grating contribution. rad/m.
double material_mismatch(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius temperature);

// Lambda(T) = Lambda_ref (1 + alpha (T - T_ref)).
double grating_period(const CrystalSpec& crystal, Celsius temperature);

// Delta k = k(2w,T) - 2k(w,T) - 2 pi / Lambda(T). Positive when the material mismatch exceeds
// the grating vector. Requires a poling period.
double qpm_mismatch(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius temperature);

// qpm_mismatch for poled crystals, material_mismatch for birefringent ones.
double phase_mismatch(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius temperature);

// Grating period at the crystal's reference temperature that zeroes the mismatch at target.
// Bracketing search on [1 um, 100 um].
double solve_poling_period(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius target);

// sinc^2(Delta k L / 2) at one temperature.
double phase_matching_efficiency(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental,
                                 Celsius temperature);

// Temperature at which the mismatch vanishes inside [lo, hi].
Celsius phase_matched_temperature(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius lo,
                                  Celsius hi);

// Samples sinc^2 over [lo, hi] (the phase-matched temperature is inserted into the axis) and
// locates both half-maximum points by bisection.
TuningCurve tuning_curve(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius lo, Celsius hi,
                         std::size_t samples);

}  // namespace sqz
