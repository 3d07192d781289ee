#include "sqz/quantum_noise.hpp"

#include <cmath>

#include <fmt/format.h>

#include "sqz/bench.hpp"
#include "sqz/errors.hpp"
#include "sqz/kernels.hpp"

namespace sqz {

std::vector<std::string> SqueezerOperatingPoint::violations(const std::string& prefix) const {
  std::vector<std::string> v;
  if (!(pump_parameter >= 0.0 && pump_parameter < 1.0))
    v.push_back(fmt::format("{}.pump_parameter must be in [0, 1) (below threshold), got {}", prefix, pump_parameter));
  if (!(decay_rate > 0.0)) v.push_back(fmt::format("{}.decay_rate must be > 0, got {} rad/s", prefix, decay_rate));
  if (!(squeeze_angle_rms_jitter >= 0.0))
    v.push_back(fmt::format("{}.squeeze_angle_rms_jitter must be >= 0, got {}", prefix, squeeze_angle_rms_jitter));
  if (!std::isfinite(squeeze_angle_mean)) v.push_back(fmt::format("{}.squeeze_angle_mean must be finite", prefix));
  return v;
}

double ScatterNoise::at(double frequency_hz) const {
  if (amplitude == 0.0) return 0.0;
  return amplitude * std::pow(reference_frequency / frequency_hz, exponent);
}

double ElectronicNoise::at(double frequency_hz) const {
  if (low_level == 0.0 && high_level == 0.0) return 0.0;
  if (frequency_hz <= low_frequency) return low_level;
  if (frequency_hz >= high_frequency) return high_level;
  const double u = std::log(frequency_hz / low_frequency) / std::log(high_frequency / low_frequency);
  const double db = (1.0 - u) * 10.0 * std::log10(low_level) + u * 10.0 * std::log10(high_level);
  return std::pow(10.0, db / 10.0);
}

std::vector<std::string> DetectionChain::violations(const std::string& prefix) const {
  std::vector<std::string> v;
  auto unit = [&](double e, const char* name) {
    if (!(e >= 0.0 && e <= 1.0)) v.push_back(fmt::format("{}.{} must be in [0, 1], got {}", prefix, name, e));
  };
  unit(escape_efficiency, "escape_efficiency");
  unit(propagation_efficiency, "propagation_efficiency");
  unit(homodyne_efficiency, "homodyne_efficiency");
  unit(quantum_efficiency, "quantum_efficiency");
  if (!(electronic.low_level >= 0.0 && electronic.high_level >= 0.0))
    v.push_back(fmt::format("{}: electronic noise levels must be >= 0", prefix));
  if ((electronic.low_level > 0.0) != (electronic.high_level > 0.0))
    v.push_back(fmt::format("{}: electronic noise anchors must both be zero or both positive", prefix));
  if (!(electronic.low_frequency > 0.0 && electronic.high_frequency > electronic.low_frequency))
    v.push_back(fmt::format("{}: electronic noise anchor frequencies must satisfy 0 < low < high", prefix));
  if (!(scatter.amplitude >= 0.0)) v.push_back(fmt::format("{}.scatter.amplitude must be >= 0", prefix));
  if (!(scatter.reference_frequency > 0.0))
    v.push_back(fmt::format("{}.scatter.reference_frequency must be > 0", prefix));
  if (!std::isfinite(scatter.exponent)) v.push_back(fmt::format("{}.scatter.exponent must be finite", prefix));
  return v;
}

QuadratureVariances quadrature_variances(const SqueezerOperatingPoint& op, double total_efficiency,
                                         double angular_frequency) {
  const double x = op.pump_parameter;
  if (!(x >= 0.0 && x < 1.0))
    throw Error(ErrorKind::domain,
                fmt::format("pump parameter {} is outside [0, 1); at or above threshold is unsupported", x));
  if (!(total_efficiency >= 0.0 && total_efficiency <= 1.0))
    throw Error(ErrorKind::domain, fmt::format("total efficiency {} is outside [0, 1]", total_efficiency));
  if (!(op.decay_rate > 0.0)) throw Error(ErrorKind::domain, "cavity decay rate must be > 0");
  const double w = angular_frequency / op.decay_rate;
  const double w2 = w * w;
  const double gain = 4.0 * x * total_efficiency;
  return {RelativeNoisePower(1.0 - gain / ((1.0 + x) * (1.0 + x) + w2)),
          RelativeNoisePower(1.0 + gain / ((1.0 - x) * (1.0 - x) + w2))};
}

RelativeNoisePower rotated_variance(RelativeNoisePower v_minus, RelativeNoisePower v_plus, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return RelativeNoisePower(v_minus.linear() * c * c + v_plus.linear() * s * s);
}

RelativeNoisePower jitter_averaged_variance(RelativeNoisePower v_minus, RelativeNoisePower v_plus, double mean,
                                            double rms) {
  if (!(rms >= 0.0)) throw Error(ErrorKind::domain, fmt::format("angle jitter must be >= 0, got {}", rms));
  if (rms == 0.0) return rotated_variance(v_minus, v_plus, mean);
  const double avg = 0.5 * (v_minus.linear() + v_plus.linear());
  const double half = 0.5 * (v_plus.linear() - v_minus.linear());
  return RelativeNoisePower(avg - half * std::cos(2.0 * mean) * std::exp(-2.0 * rms * rms));
}

NoiseModel make_noise_model(const SqueezerOperatingPoint& op, const DetectionChain& chain) {
  return {op, chain.total_efficiency(), chain.scatter, chain.electronic};
}

double detected_variance(const NoiseModel& model, double frequency_hz, double angle_offset, bool include_electronic) {
  if (!(frequency_hz > 0.0)) throw Error(ErrorKind::argument, fmt::format("frequency must be > 0, got {}", frequency_hz));
  const auto q = quadrature_variances(model.op, model.total_efficiency, 2.0 * pi * frequency_hz);
  double v = jitter_averaged_variance(q.minus, q.plus, model.op.squeeze_angle_mean + angle_offset,
                                      model.op.squeeze_angle_rms_jitter)
                 .linear();
  v += model.scatter.at(frequency_hz);
  if (include_electronic) v += model.electronic.at(frequency_hz);
  return v;
}

std::vector<std::pair<std::string, std::string>> noise_metadata(const NoiseModel& model,
                                                                const DetectionChain& chain) {
  return {
      {"pump_parameter", fmt::format("{}", model.op.pump_parameter)},
      {"decay_rate_rad_per_s", fmt::format("{}", model.op.decay_rate)},
      {"squeeze_angle_mean_rad", fmt::format("{}", model.op.squeeze_angle_mean)},
      {"squeeze_angle_rms_jitter_rad", fmt::format("{}", model.op.squeeze_angle_rms_jitter)},
      {"escape_efficiency", fmt::format("{}", chain.escape_efficiency)},
      {"propagation_efficiency", fmt::format("{}", chain.propagation_efficiency)},
      {"homodyne_efficiency", fmt::format("{}", chain.homodyne_efficiency)},
      {"quantum_efficiency", fmt::format("{}", chain.quantum_efficiency)},
      {"total_efficiency", fmt::format("{}", model.total_efficiency)},
      {"scatter_amplitude", fmt::format("{}", model.scatter.amplitude)},
      {"scatter_reference_frequency_hz", fmt::format("{}", model.scatter.reference_frequency)},
      {"scatter_exponent", fmt::format("{}", model.scatter.exponent)},
      {"electronic_low", fmt::format("{} at {} Hz", model.electronic.low_level, model.electronic.low_frequency)},
      {"electronic_high", fmt::format("{} at {} Hz", model.electronic.high_level, model.electronic.high_frequency)},
  };
}

DetectedSpectra detected_spectrum(const BenchConfig& bench, std::span<const double> frequencies,
                                  double angle_offset) {
  if (frequencies.empty()) throw Error(ErrorKind::argument, "detected_spectrum needs at least one frequency");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] > 0.0)) throw Error(ErrorKind::argument, "frequencies must be positive");
    if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
      throw Error(ErrorKind::argument, "frequencies must be strictly increasing");
  }
  const NoiseModel model = bench.noise_model();
  const bool anti = std::abs(std::cos(angle_offset)) < std::abs(std::sin(angle_offset));

  DetectedSpectra out;
  for (auto* t : {&out.raw, &out.subtracted}) {
    t->axis_kind = AxisKind::frequency;
    t->axis.assign(frequencies.begin(), frequencies.end());
    t->values.resize(frequencies.size());
    t->metadata = noise_metadata(model, bench.detection);
    t->metadata.emplace_back("quadrature_offset_rad", fmt::format("{}", angle_offset));
  }
  out.raw.kind = anti ? TraceKind::antisqueezed_raw : TraceKind::squeezed_raw;
  out.subtracted.kind = anti ? TraceKind::antisqueezed_subtracted : TraceKind::squeezed_subtracted;
  kernels::detected_variance_parallel(model, frequencies, angle_offset, true, out.raw.values);
  kernels::detected_variance_parallel(model, frequencies, angle_offset, false, out.subtracted.values);
  return out;
}

}  // namespace sqz
