#include "sqz/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "sqz/bench.hpp"
#include "sqz/errors.hpp"
#include "sqz/quantum_noise.hpp"

namespace sqz {

namespace {

// Multiplicative finite-averaging fluctuation with unit mean: Gamma(N, 1/N).
class TraceFuzz {
 public:
  TraceFuzz(std::uint64_t seed, std::uint64_t stream, double averages)
      : rng_(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))), gamma_(std::max(averages, 1.0), 1.0 / std::max(averages, 1.0)) {}
  double operator()() { return gamma_(rng_); }

 private:
  std::mt19937_64 rng_;
  std::gamma_distribution<double> gamma_;
};

// Triangle wave in [0, 1], starting at 0.
double triangle(double t, double rate) {
  const double phase = t * rate - std::floor(t * rate);
  return phase < 0.5 ? 2.0 * phase : 2.0 - 2.0 * phase;
}

void add_setting_metadata(NoiseTrace& t, const MeasurementSettings& s, std::uint64_t seed) {
  t.metadata.emplace_back("rbw_hz", fmt::format("{}", s.rbw));
  t.metadata.emplace_back("vbw_hz", fmt::format("{}", s.vbw));
  t.metadata.emplace_back("trace_noise", s.trace_noise ? "on" : "off");
  t.metadata.emplace_back("seed", fmt::format("{}", seed));
}

// Instantaneous variance at one analysis frequency as a function of the homodyne angle, no jitter.
struct AngleResponse {
  double v_minus;
  double v_plus;
  double excess;  // scatter, angle independent

  double operator()(double theta) const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return v_minus * c * c + v_plus * s * s + excess;
  }
};

AngleResponse angle_response(const NoiseModel& model, double frequency) {
  const auto q = quadrature_variances(model.op, model.total_efficiency, 2.0 * pi * frequency);
  return {q.minus.linear(), q.plus.linear(), model.scatter.at(frequency)};
}

}  // namespace

std::vector<std::string> MeasurementSettings::violations(const std::string& p) const {
  std::vector<std::string> v;
  auto positive = [&](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) v.push_back(fmt::format("{}.{} must be > 0 (got {})", p, name, x));
  };
  auto non_negative = [&](double x, const char* name) {
    if (!(x >= 0.0) || !std::isfinite(x)) v.push_back(fmt::format("{}.{} must be >= 0 (got {})", p, name, x));
  };
  positive(rbw, "rbw");
  positive(vbw, "vbw");
  if (vbw > rbw) v.push_back(fmt::format("{}: vbw ({} Hz) must not exceed rbw ({} Hz)", p, vbw, rbw));
  positive(center_frequency, "center_frequency");
  non_negative(span, "span");
  positive(sweep_time, "sweep_time");
  positive(ramp.rate, "ramp.rate");
  non_negative(ramp.amplitude, "ramp.amplitude");
  positive(dither.frequency, "dither.frequency");
  non_negative(dither.depth, "dither.depth");
  non_negative(dither.line_fundamental, "dither.line_fundamental");
  non_negative(dither.line_harmonic, "dither.line_harmonic");
  non_negative(servo.gain, "servo.gain");
  non_negative(servo.integrator_corner, "servo.integrator_corner");
  positive(spectrum_start, "spectrum_start");
  if (!(spectrum_stop > spectrum_start))
    v.push_back(fmt::format("{}: spectrum_stop ({}) must exceed spectrum_start ({})", p, spectrum_stop, spectrum_start));
  if (spectrum_points < 50) v.push_back(fmt::format("{}.spectrum_points must be >= 50 (got {})", p, spectrum_points));
  positive(lock_duration, "lock_duration");
  if (lock_oversampling < 20)
    v.push_back(fmt::format("{}.lock_oversampling must be >= 20 samples per dither period (got {})", p, lock_oversampling));
  return v;
}

std::vector<double> log_spaced(double start, double stop, std::size_t points) {
  if (!(start > 0.0) || !(stop > start) || points < 2)
    throw Error(ErrorKind::argument,
                fmt::format("log axis needs 0 < start < stop and >= 2 points (got {}, {}, {})", start, stop, points));
  std::vector<double> f(points);
  const double ls = std::log(start);
  const double step = (std::log(stop) - ls) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) f[i] = std::exp(ls + step * static_cast<double>(i));
  f.front() = start;
  f.back() = stop;
  return f;
}

std::size_t log_bin_index(const std::vector<double>& axis, double frequency) {
  const std::size_t n = axis.size();
  if (n == 0 || !(frequency > 0.0)) return n;
  auto edge = [&](std::size_t i) {  // lower edge of bin i, geometric midpoint
    if (i == 0) return n > 1 ? axis[0] * std::sqrt(axis[0] / axis[1]) : axis[0];
    if (i == n) return n > 1 ? axis[n - 1] * std::sqrt(axis[n - 1] / axis[n - 2]) : axis[0];
    return std::sqrt(axis[i - 1] * axis[i]);
  };
  if (frequency < edge(0) || frequency >= edge(n)) return n;
  std::size_t lo = 0, hi = n;  // edge(lo) <= f < edge(hi)
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (frequency >= edge(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

NoiseTrace zero_span_trace(const BenchConfig& bench, const MeasurementSettings& settings, double duration,
                           std::uint64_t seed) {
  if (settings.span != 0.0) throw Error(ErrorKind::argument, "zero_span_trace needs span = 0");
  if (!(duration > 0.0)) throw Error(ErrorKind::argument, fmt::format("duration must be > 0 (got {} s)", duration));
  if (!(settings.vbw > 0.0) || !(settings.ramp.rate > 0.0))
    throw Error(ErrorKind::argument, "zero_span_trace needs vbw > 0 and a ramp rate > 0");

  const NoiseModel model = bench.noise_model();
  const double fs = std::max(20.0 * settings.vbw, 2000.0 * settings.ramp.rate);
  const auto n = static_cast<std::size_t>(std::ceil(duration * fs)) + 1;
  const double dt = duration / static_cast<double>(n - 1);
  const double alpha = 1.0 - std::exp(-2.0 * pi * settings.vbw * dt);

  NoiseTrace t;
  t.axis_kind = AxisKind::time;
  t.kind = TraceKind::scanned_zero_span;
  t.axis.resize(n);
  t.values.resize(n);
  t.angle.resize(n);
  TraceFuzz fuzz(seed, 0, settings.sweep_time * settings.vbw);
  double smoothed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double time = dt * static_cast<double>(i);
    const double offset = settings.ramp.amplitude * (triangle(time, settings.ramp.rate) - 0.5);
    const double v = detected_variance(model, settings.center_frequency, offset, false);
    smoothed = i == 0 ? v : smoothed + alpha * (v - smoothed);
    t.axis[i] = time;
    t.angle[i] = model.op.squeeze_angle_mean + offset;
    t.values[i] = settings.trace_noise ? smoothed * fuzz() : smoothed;
  }
  if (settings.ramp.amplitude < pi)
    t.warnings.push_back(fmt::format("ramp amplitude {} rad is below pi; the trace may miss V- or V+",
                                     settings.ramp.amplitude));
  t.metadata = noise_metadata(model, bench.detection);
  t.metadata.emplace_back("center_frequency_hz", fmt::format("{}", settings.center_frequency));
  t.metadata.emplace_back("ramp_rate_hz", fmt::format("{}", settings.ramp.rate));
  t.metadata.emplace_back("ramp_amplitude_rad", fmt::format("{}", settings.ramp.amplitude));
  t.metadata.emplace_back("sample_rate_hz", fmt::format("{}", fs));
  add_setting_metadata(t, settings, seed);
  return t;
}

NoiseTrace subtract_electronic_noise(const NoiseTrace& raw, const NoiseTrace& electronic) {
  if (raw.size() != electronic.size() || raw.values.size() != electronic.values.size())
    throw Error(ErrorKind::alignment,
                fmt::format("trace lengths differ ({} vs {} samples)", raw.size(), electronic.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double a = raw.axis[i];
    const double b = electronic.axis[i];
    if (std::abs(a - b) > 1e-9 * std::max(std::abs(a), std::abs(b)))
      throw Error(ErrorKind::alignment, fmt::format("axes differ at sample {} ({} vs {})", i, a, b));
  }
  NoiseTrace out = raw;
  switch (raw.kind) {
    case TraceKind::antisqueezed_raw: out.kind = TraceKind::antisqueezed_subtracted; break;
    case TraceKind::shot:
    case TraceKind::scanned_zero_span: break;
    default: out.kind = TraceKind::squeezed_subtracted; break;
  }
  out.valid.assign(raw.size(), 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.values[i] = raw.values[i] - electronic.values[i];
    if (!(electronic.values[i] < raw.values[i]) || !raw.is_valid(i)) out.valid[i] = 0;
  }
  const auto bad = static_cast<std::size_t>(std::count(out.valid.begin(), out.valid.end(), 0));
  if (bad > 0) out.warnings.push_back(fmt::format("{} samples at or below the electronic floor marked invalid", bad));
  out.metadata.emplace_back("electronic_subtracted", "yes");
  return out;
}

NoiseTrace electronic_trace(const BenchConfig& bench, const std::vector<double>& frequencies) {
  NoiseTrace t;
  t.axis_kind = AxisKind::frequency;
  t.kind = TraceKind::electronic;
  t.axis = frequencies;
  t.values.resize(frequencies.size());
  for (std::size_t i = 0; i < frequencies.size(); ++i) t.values[i] = bench.detection.electronic.at(frequencies[i]);
  return t;
}

BroadbandSpectra broadband_spectrum(const BenchConfig& bench, const MeasurementSettings& settings, double f_start,
                                    double f_stop, std::size_t points, std::uint64_t seed) {
  if (!(f_start > 0.0) || !(f_stop > f_start))
    throw Error(ErrorKind::argument, fmt::format("invalid frequency range [{}, {}] Hz", f_start, f_stop));
  if (points < 50) throw Error(ErrorKind::argument, fmt::format("broadband spectrum needs >= 50 points (got {})", points));

  const auto axis = log_spaced(f_start, f_stop, points);
  auto spectra = detected_spectrum(bench, axis);

  BroadbandSpectra out;
  out.squeezed = std::move(spectra.subtracted);
  out.squeezed_raw = std::move(spectra.raw);
  out.shot.axis_kind = AxisKind::frequency;
  out.shot.kind = TraceKind::shot;
  out.shot.axis = axis;
  out.shot.values.resize(points);
  for (std::size_t i = 0; i < points; ++i) out.shot.values[i] = 1.0 + bench.detection.electronic.at(axis[i]);
  out.shot.metadata = out.squeezed.metadata;

  out.dither_bin = points;
  out.dither_harmonic_bin = points;
  if (settings.dither.depth > 0.0) {
    auto inject = [&](double frequency, double level, std::size_t& bin) {
      if (level <= 0.0) return;
      bin = log_bin_index(axis, frequency);
      if (bin == points) return;
      out.squeezed.values[bin] += level;
      out.squeezed_raw.values[bin] += level;
    };
    inject(settings.dither.frequency, settings.dither.line_fundamental, out.dither_bin);
    inject(2.0 * settings.dither.frequency, settings.dither.line_harmonic, out.dither_harmonic_bin);
  }

  if (settings.trace_noise) {
    const double averages = settings.sweep_time * settings.vbw;
    std::uint64_t stream = 0;
    for (auto* t : {&out.shot, &out.squeezed_raw}) {
      TraceFuzz fuzz(seed, stream++, averages);
      for (auto& v : t->values) v *= fuzz();
    }
    // Subtracted trace follows its raw counterpart so the two stay consistent.
    for (std::size_t i = 0; i < points; ++i)
      out.squeezed.values[i] = out.squeezed_raw.values[i] - bench.detection.electronic.at(axis[i]);
  }
  for (auto* t : {&out.shot, &out.squeezed, &out.squeezed_raw}) {
    add_setting_metadata(*t, settings, seed);
    t->metadata.emplace_back("dither_frequency_hz", fmt::format("{}", settings.dither.frequency));
    t->metadata.emplace_back("dither_depth_rad", fmt::format("{}", settings.dither.depth));
  }
  if (settings.trace_noise) {
    out.squeezed.valid.assign(points, 1);
    for (std::size_t i = 0; i < points; ++i)
      if (!(out.squeezed.values[i] > 0.0)) out.squeezed.valid[i] = 0;
  }
  return out;
}

namespace {

// Homodyne power, AC coupling, mixer and video filter of the dither lock. The servo angle is
// supplied per step by the caller.
class LockDemodulator {
 public:
  LockDemodulator(const BenchConfig& bench, const MeasurementSettings& s, std::uint64_t seed)
      : response_(angle_response(bench.noise_model(), s.center_frequency)),
        depth_(s.dither.depth),
        omega_(2.0 * pi * s.dither.frequency),
        dt_(1.0 / (s.dither.frequency * s.lock_oversampling)),
        hp_(1.0 / (1.0 + 2.0 * pi * (s.dither.frequency / 10.0) * dt_)),
        lp_(1.0 - std::exp(-2.0 * pi * s.vbw * dt_)),
        noise_(s.trace_noise),
        fuzz_(seed, 7, std::max(1.0, s.rbw * dt_)) {}

  double dt() const { return dt_; }
  double variance(double theta) const { return response_(theta); }

  // Advances one sample at servo angle theta_s; returns the filtered error signal.
  double step(double theta_s) {
    const double t = dt_ * static_cast<double>(n_++);
    const double s = std::sin(omega_ * t);
    double p = response_(theta_s + depth_ * s);
    if (noise_) p *= fuzz_();
    if (n_ == 1) last_p_ = p;
    hp_out_ = hp_ * (hp_out_ + p - last_p_);
    last_p_ = p;
    error_ += lp_ * (2.0 * s * hp_out_ - error_);
    return error_;
  }

 private:
  AngleResponse response_;
  double depth_, omega_, dt_, hp_, lp_;
  bool noise_;
  TraceFuzz fuzz_;
  std::size_t n_ = 0;
  double last_p_ = 0.0, hp_out_ = 0.0, error_ = 0.0;
};

void check_lock_settings(const MeasurementSettings& s) {
  if (!(s.dither.frequency > 0.0)) throw Error(ErrorKind::argument, "noise lock needs a dither frequency > 0");
  if (s.lock_oversampling < 20)
    throw Error(ErrorKind::argument, "noise lock needs >= 20 samples per dither period");
  if (!(s.vbw > 0.0)) throw Error(ErrorKind::argument, "noise lock needs vbw > 0");
}

}  // namespace

LockResult noise_lock_simulate(const BenchConfig& bench, const MeasurementSettings& settings, double initial_angle,
                               double duration, std::uint64_t seed) {
  check_lock_settings(settings);
  const double periods = duration * settings.dither.frequency;
  if (!(periods >= 100.0))
    throw Error(ErrorKind::argument,
                fmt::format("lock duration {} s covers {:.1f} dither periods; at least 100 are needed", duration, periods));

  LockDemodulator demod(bench, settings, seed);
  const double dt = demod.dt();
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  const auto window_start = n - n / 5;
  const double kp = settings.servo.gain;
  const double ki = settings.servo.gain * 2.0 * pi * settings.servo.integrator_corner;
  const auto decimate = static_cast<std::size_t>(settings.lock_oversampling);

  LockResult r;
  auto& ts = r.angle_timeseries;
  ts.axis_kind = AxisKind::time;
  ts.kind = TraceKind::scanned_zero_span;

  double theta = initial_angle;
  double integral = 0.0;
  double sum_sq = 0.0;
  bool in_band = true;
  std::size_t diverged = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = demod.step(theta);
    integral += ki * e * dt;
    theta = initial_angle - (kp * e + integral);
    if (i % decimate == 0 || i + 1 == n) {
      ts.axis.push_back(dt * static_cast<double>(i + 1));
      ts.angle.push_back(theta);
      ts.values.push_back(demod.variance(theta));
    }
    if (i >= window_start) {
      sum_sq += theta * theta;
      if (std::abs(theta) >= 0.05) in_band = false;
      if (std::abs(theta) > pi / 2.0) ++diverged;
    }
    if (!std::isfinite(theta)) break;
  }
  const double window = static_cast<double>(n - window_start);
  r.residual_rms = std::sqrt(sum_sq / window);
  r.final_angle = theta;
  r.locked = in_band && std::isfinite(theta);
  if (!std::isfinite(theta)) {
    r.locked = false;
    r.diagnostic = "servo state became non-finite";
  } else if (diverged > window / 2) {
    r.diagnostic = fmt::format("servo diverged: |angle| above pi/2 for {:.0f}% of the final window",
                               100.0 * static_cast<double>(diverged) / window);
  } else if (!r.locked) {
    r.diagnostic = fmt::format("not locked: final angle {:.4g} rad, residual {:.4g} rad", theta, r.residual_rms);
  } else {
    r.diagnostic = "locked";
  }
  ts.metadata = noise_metadata(bench.noise_model(), bench.detection);
  ts.metadata.emplace_back("initial_angle_rad", fmt::format("{}", initial_angle));
  ts.metadata.emplace_back("servo_gain", fmt::format("{}", settings.servo.gain));
  ts.metadata.emplace_back("servo_integrator_corner_hz", fmt::format("{}", settings.servo.integrator_corner));
  ts.metadata.emplace_back("sample_rate_hz", fmt::format("{}", 1.0 / dt));
  ts.metadata.emplace_back("locked", r.locked ? "yes" : "no");
  ts.metadata.emplace_back("residual_rms_rad", fmt::format("{}", r.residual_rms));
  add_setting_metadata(ts, settings, seed);
  return r;
}

double noise_lock_error_signal(const BenchConfig& bench, const MeasurementSettings& settings, double servo_angle) {
  check_lock_settings(settings);
  LockDemodulator demod(bench, settings, 0);
  const auto per_period = static_cast<std::size_t>(settings.lock_oversampling);
  // Let the AC coupling and video filter settle, then average whole dither periods.
  const double settle = 10.0 / (2.0 * pi * std::min(settings.vbw, settings.dither.frequency / 10.0));
  const auto warmup = static_cast<std::size_t>(std::ceil(settle / demod.dt() / per_period)) * per_period;
  for (std::size_t i = 0; i < warmup; ++i) demod.step(servo_angle);
  double sum = 0.0;
  const std::size_t count = 50 * per_period;
  for (std::size_t i = 0; i < count; ++i) sum += demod.step(servo_angle);
  return sum / static_cast<double>(count);
}

}  // namespace sqz
