#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqz/trace.hpp"

namespace sqz {

struct BenchConfig;

struct RampSettings {
  double rate = 10.0;      // Hz, triangle repetition rate
  double amplitude = 3.5;  // rad, peak to peak
  bool operator==(const RampSettings&) const = default;
};

struct DitherSettings {
  double frequency = 13.2e3;  // Hz
  double depth = 0.05;        // rad, sine amplitude
  double line_fundamental = 0.0;  // excess power injected at f_d, shot-noise units
  double line_harmonic = 0.0;     // excess power injected at 2 f_d
  bool operator==(const DitherSettings&) const = default;
};

// Servo C(s) = gain (1 + 2 pi f_c / s) acting on the demodulated error signal.
struct ServoSettings {
  double gain = 1.0;
  double integrator_corner = 500.0;  // Hz
  bool operator==(const ServoSettings&) const = default;
};

struct MeasurementSettings {
  double rbw = 100e3;  // Hz; metadata only, traces are shot-noise relative
  double vbw = 3e3;    // Hz
  double center_frequency = 900e3;
  double span = 0.0;
  double sweep_time = 0.3;  // s
  RampSettings ramp;
  DitherSettings dither;
  ServoSettings servo;
  double spectrum_start = 1e3;
  double spectrum_stop = 100e3;
  std::size_t spectrum_points = 200;
  double lock_duration = 0.05;  // s
  int lock_oversampling = 32;   // samples per dither period
  bool trace_noise = false;     // finite-averaging fluctuation, seeded

  std::vector<std::string> violations(const std::string& prefix = "measurement") const;
  bool operator==(const MeasurementSettings&) const = default;
};

// Triangular angle scan at the center frequency, smoothed by the video filter.
NoiseTrace zero_span_trace(const BenchConfig& bench, const MeasurementSettings& settings, double duration,
                           std::uint64_t seed = 0);

// Linear per-sample subtraction. Samples where the floor reaches the raw level are marked invalid.
NoiseTrace subtract_electronic_noise(const NoiseTrace& raw, const NoiseTrace& electronic);

// Electronic floor sampled on an existing axis.
NoiseTrace electronic_trace(const BenchConfig& bench, const std::vector<double>& frequencies);

struct BroadbandSpectra {
  NoiseTrace shot;          // unity plus electronic floor
  NoiseTrace squeezed;      // electronics subtracted, with dither lines
  NoiseTrace squeezed_raw;  // electronics included, with dither lines
  std::size_t dither_bin = 0;           // sample index holding the f_d line, size() if none
  std::size_t dither_harmonic_bin = 0;  // sample index holding the 2 f_d line, size() if none
};

BroadbandSpectra broadband_spectrum(const BenchConfig& bench, const MeasurementSettings& settings, double f_start,
                                    double f_stop, std::size_t points, std::uint64_t seed = 0);

std::vector<double> log_spaced(double start, double stop, std::size_t points);

// Sample whose logarithmic bin contains frequency, or axis.size() when outside the axis.
std::size_t log_bin_index(const std::vector<double>& axis, double frequency);

struct LockResult {
  NoiseTrace angle_timeseries;  // axis: time; angle: servo angle; values: instantaneous variance
  bool locked = false;
  double residual_rms = 0.0;  // rad, over the final 20 % of the run
  double final_angle = 0.0;
  std::string diagnostic;
};

LockResult noise_lock_simulate(const BenchConfig& bench, const MeasurementSettings& settings, double initial_angle,
                               double duration, std::uint64_t seed = 0);

// Demodulated error signal with the servo open and the angle held at servo_angle.
double noise_lock_error_signal(const BenchConfig& bench, const MeasurementSettings& settings, double servo_angle);

}  // namespace sqz
