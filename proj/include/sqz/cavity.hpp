#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sqz/crystal.hpp"
#include "sqz/units.hpp"

namespace sqz {

// Power transmissions of one mirror at the fundamental and at the harmonic.
struct Coupler {
  double t_fundamental = 0.0;
  double t_harmonic = 0.0;
  bool operator==(const Coupler&) const = default;
};

// Two-mirror standing-wave cavity around one crystal. The crystal is traversed twice per round trip.
struct CavitySpec {
  double geometric_length_one_way = 0.0;  // m, mirror to mirror
  CrystalSpec crystal;
  Coupler input_coupler;   // the mirror the fundamental pump (SHG) or seed (OPO) enters through
  Coupler output_coupler;
  double intracavity_loss_round_trip = 0.0;  // crystal absorption, AR and mirror scatter
  std::array<double, 2> mirror_curvatures{};  // m
  Celsius operating_temperature{25.0};
  double mode_matching = 1.0;
  double pump_enhancement = 1.0;  // OPO only: single-pass pump, optionally scaled
  std::optional<double> waist;    // overrides the stability-solution waist

  std::vector<std::string> violations(const std::string& prefix = "cavity") const;
  bool operator==(const CavitySpec&) const = default;
};

struct CavityDerived {
  double round_trip_path = 0.0;  // m, optical
  double fsr = 0.0;              // Hz
  double finesse = 0.0;
  double linewidth_fwhm = 0.0;   // Hz
  double decay_rate_hwhm = 0.0;  // rad/s
  double escape_efficiency = 0.0;
};

struct SolverSettings {
  double shg_relative_tolerance = 1e-10;
  int shg_max_iterations = 10000;
  double quadrature_abs_tolerance = 1e-9;
  bool operator==(const SolverSettings&) const = default;
};

CavityDerived derive_cavity(const CavitySpec& cavity, double wavelength_m, Celsius temperature);

// h(sigma, xi) = 1/(4 xi) |int_{-xi}^{xi} exp(i sigma t)/(1 + i t) dt|^2 by adaptive Gauss-Kronrod.
double boyd_kleinman_h(double xi, double sigma, double abs_tolerance = 1e-9);

struct FocusingOptimum {
  double sigma = 0.0;
  double h = 0.0;
};

// Best phase-mismatch parameter at fixed focusing.
FocusingOptimum boyd_kleinman_best_sigma(double xi, double abs_tolerance = 1e-9);

// TEM00 waist of the two-mirror resonator (free-space equivalent length includes the crystal).
double cavity_waist(const CavitySpec& cavity, double wavelength_m);

struct SinglePassConversion {
  double e_nl = 0.0;  // 1/W, P_2w = e_nl P_w^2
  double xi = 0.0;
  double sigma = 0.0;
  double h = 0.0;
  bool out_of_validated_range = false;  // xi > 1e3
};

// Gaussian-beam single-pass SHG coefficient with focus at the crystal centre and phase mismatch
// tuned to the optimum for the given focusing.
SinglePassConversion single_pass_conversion(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental,
                                            double waist_m, Celsius temperature,
                                            double abs_tolerance = 1e-9);

struct ShgSolution {
  double circulating = 0.0;   // W at the fundamental
  double harmonic_out = 0.0;  // W leaving through the input coupler
  double harmonic_generated = 0.0;
  double reflected = 0.0;    // fundamental reflected from the input coupler, incl. mode mismatch
  double transmitted = 0.0;  // fundamental through the output coupler
  double lost = 0.0;         // intracavity linear loss
  int iterations = 0;
  double residual = 0.0;
};

// Fraction of generated harmonic that exits through the input coupler.
double harmonic_output_fraction(const CavitySpec& cavity);

ShgSolution shg_output(const CavitySpec& cavity, double e_nl, double pump_in, const SolverSettings& solver = {});

// E_NL such that shg_output(pump_in).harmonic_out == target_harmonic, on the ascending branch.
double fit_shg_nonlinearity(const CavitySpec& cavity, double pump_in, double target_harmonic,
                            const SolverSettings& solver = {});

double opo_threshold(const CavitySpec& cavity, double e_nl);

// x = sqrt(P_pump * enhancement / P_th)
double pump_parameter_from_power(const CavitySpec& cavity, double e_nl, double pump_power);

}  // namespace sqz
