#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sqz/units.hpp"

namespace sqz {

// Functional form of a dispersion dataset. Wavelengths inside the formulas are in micrometres.
enum class DispersionForm {
  // n^2 = A + sum_i B_i/(l^2 - C_i) - D l^2, then n(T) = n + (T - T_ref) sum_m G_m / l^m
  pole_sellmeier,
  // n^2 = A1 + (A2 + B1 F)/(l^2 - (A3 + B2 F)^2) + B3 F - A4 l^2 with F = (T - T0)(T + T1)
  thermal_sellmeier,
};

// One polarization axis of one material, as read from a shipped table.
struct DispersionTable {
  std::string id;
  std::string source;
  DispersionForm form = DispersionForm::pole_sellmeier;
  double wavelength_min_um = 0.0;
  double wavelength_max_um = 0.0;
  double temperature_min_c = 0.0;
  double temperature_max_c = 0.0;

  // pole_sellmeier
  double a = 0.0;
  std::vector<double> pole_strength;
  std::vector<double> pole_position;
  double d = 0.0;
  std::vector<double> dndt;  // G_0, G_1, ... in 1/K
  double t_ref_c = 0.0;

  // thermal_sellmeier
  double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0;
  double b1 = 0.0, b2 = 0.0, b3 = 0.0;
  double t0_c = 0.0, t1_c = 0.0;

  // Added to n after evaluation (composition shift).
  double index_offset = 0.0;

  // Throws a range error naming the dataset limits when outside them.
  double index(double wavelength_m, Celsius temperature) const;

  friend bool operator==(const DispersionTable&, const DispersionTable&) = default;
};

DispersionTable parse_dispersion_table(const std::string& text, const std::string& source_name);
DispersionTable load_dispersion_table(const std::filesystem::path& path);

// Directory holding the shipped tables: $SQZSIM_DATA_DIR when set, else the build-time default.
std::filesystem::path default_data_dir();

// Looks up "<data_dir>/dispersion/<id>.txt".
DispersionTable resolve_dispersion(const std::string& id, const std::filesystem::path& data_dir);

}  // namespace sqz
