#pragma once

#include <span>
#include <string>
#include <vector>

#include "sqz/trace.hpp"
#include "sqz/units.hpp"

namespace sqz {

struct BenchConfig;

// Sub-threshold degenerate OPO state at the output coupler.
struct SqueezerOperatingPoint {
  double pump_parameter = 0.0;  // x = sqrt(P / P_th), below threshold
  double decay_rate = 0.0;      // gamma, cavity HWHM in rad/s
  double squeeze_angle_mean = 0.0;        // rad
  double squeeze_angle_rms_jitter = 0.0;  // rad

  std::vector<std::string> violations(const std::string& prefix = "operating_point") const;
  bool operator==(const SqueezerOperatingPoint&) const = default;
};

// Scattered-LO excess noise A (f0 / f)^p, in shot-noise units.
struct ScatterNoise {
  double amplitude = 0.0;
  double reference_frequency = 1e4;  // Hz
  double exponent = 3.0;

  double at(double frequency_hz) const;
  bool operator==(const ScatterNoise&) const = default;
};

// Electronic floor relative to shot noise, log-linear in dB between two anchors, held flat outside.
struct ElectronicNoise {
  double low_frequency = 1e3;  // Hz
  double low_level = 0.0;      // linear
  double high_frequency = 9e5;
  double high_level = 0.0;

  double at(double frequency_hz) const;
  bool operator==(const ElectronicNoise&) const = default;
};

struct DetectionChain {
  double escape_efficiency = 1.0;
  double propagation_efficiency = 1.0;
  double homodyne_efficiency = 1.0;  // mode overlap, visibility squared
  double quantum_efficiency = 1.0;
  ElectronicNoise electronic;
  ScatterNoise scatter;

  double total_efficiency() const {
    return escape_efficiency * propagation_efficiency * homodyne_efficiency * quantum_efficiency;
  }
  std::vector<std::string> violations(const std::string& prefix = "detection") const;
  bool operator==(const DetectionChain&) const = default;
};

struct QuadratureVariances {
  RelativeNoisePower minus;
  RelativeNoisePower plus;
};

// V-+(W) = 1 -+ eta 4x / ((1 +- x)^2 + (W/gamma)^2)
QuadratureVariances quadrature_variances(const SqueezerOperatingPoint& op, double total_efficiency,
                                         double angular_frequency);

// V(theta) = V- cos^2 theta + V+ sin^2 theta
RelativeNoisePower rotated_variance(RelativeNoisePower v_minus, RelativeNoisePower v_plus, double theta);

// E[V(theta)] for theta ~ N(mean, rms^2).
RelativeNoisePower jitter_averaged_variance(RelativeNoisePower v_minus, RelativeNoisePower v_plus, double mean,
                                            double rms);

// Everything needed to evaluate a detected spectrum point, flattened for the kernels.
struct NoiseModel {
  SqueezerOperatingPoint op;
  double total_efficiency = 1.0;
  ScatterNoise scatter;
  ElectronicNoise electronic;
};

NoiseModel make_noise_model(const SqueezerOperatingPoint& op, const DetectionChain& chain);

// Detected variance at one frequency. angle_offset shifts the measured quadrature
// (pi/2 for the anti-squeezed quadrature).
double detected_variance(const NoiseModel& model, double frequency_hz, double angle_offset, bool include_electronic);

struct DetectedSpectra {
  NoiseTrace raw;
  NoiseTrace subtracted;
};

DetectedSpectra detected_spectrum(const BenchConfig& bench, std::span<const double> frequencies,
                                  double angle_offset = 0.0);

// Metadata rows recording the noise parameters behind a trace.
std::vector<std::pair<std::string, std::string>> noise_metadata(const NoiseModel& model,
                                                                const DetectionChain& chain);

}  // namespace sqz
