#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP version that
// must produce bit-identical output; the library calls the parallel one.

#include <span>

#include "sqz/crystal.hpp"
#include "sqz/quantum_noise.hpp"

namespace sqz::kernels {

int max_threads();

void tuning_efficiency_serial(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental,
                              std::span<const double> temperatures_c, std::span<double> out);
void tuning_efficiency_parallel(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental,
                                std::span<const double> temperatures_c, std::span<double> out);

void detected_variance_serial(const NoiseModel& model, std::span<const double> frequencies_hz, double angle_offset,
                              bool include_electronic, std::span<double> out);
void detected_variance_parallel(const NoiseModel& model, std::span<const double> frequencies_hz,
                                double angle_offset, bool include_electronic, std::span<double> out);

// h(sigma_j, xi_i) stored row-major by xi.
void boyd_kleinman_grid_serial(std::span<const double> xi, std::span<const double> sigma, double abs_tolerance,
                               std::span<double> out);
void boyd_kleinman_grid_parallel(std::span<const double> xi, std::span<const double> sigma, double abs_tolerance,
                                 std::span<double> out);

}  // namespace sqz::kernels
