#include "sqz/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "sqz/bench.hpp"
#include "sqz/cavity.hpp"
#include "sqz/crystal.hpp"
#include "sqz/errors.hpp"
#include "sqz/fit.hpp"
#include "sqz/measurement.hpp"
#include "sqz/quantum_noise.hpp"
#include "sqz/trace.hpp"

namespace sqz::cli {

namespace {

namespace fs = std::filesystem;

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct Options {
  std::string command;
  std::string config;
  std::string out = ".";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  // subcommand specific
  double start_hz = 0.0;
  double stop_hz = 0.0;
  std::size_t points = 0;
  double band_start_hz = 30e3;
  double duration = 0.0;
  std::string crystal = "opo";
  double initial_angle = 0.5;
  std::string observed;
  std::vector<std::string> free;
  double target_db = 3.8;
  std::string manifest;
  std::vector<std::string> extra_args;  // subcommand flags as given, for the manifest
};

// Derived numbers and summary values reported for one run.
struct Report {
  Metadata rows;
  void add(const std::string& k, double v) { rows.emplace_back(k, fmt::format("{:.10g}", v)); }
  void add(const std::string& k, const std::string& v) { rows.emplace_back(k, v); }
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return argument_error;
    case ErrorKind::parse: return parse_error;
    case ErrorKind::validation:
    case ErrorKind::configuration:
    case ErrorKind::identifiability:
    case ErrorKind::alignment:
    case ErrorKind::domain:
    case ErrorKind::range: return validation_error;
    case ErrorKind::solver: return solver_error;
    case ErrorKind::infeasible: return infeasible_error;
    case ErrorKind::io: return io_error;
  }
  return 1;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    if (c == '\n') {
      o += "\\n";
      continue;
    }
    o += c;
  }
  return o;
}

void error_record(std::ostream& err, const std::string& kind, int code, const std::string& message) {
  fmt::print(err, "sqzsim: error kind={} exit={} message=\"{}\"\n", kind, code, escape(message));
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream buffer;
  body(buffer);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::io, fmt::format("cannot write {}", path.string()));
  f << buffer.str();
  if (!f) throw Error(ErrorKind::io, fmt::format("failed writing {}", path.string()));
}

fs::path prepare_out_dir(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorKind::io, fmt::format("output directory {} is not usable", dir.string()));
  return dir;
}

Metadata run_metadata(const Options& o) {
  return {{"tool", fmt::format("sqzsim {}", tool_version)}, {"command", o.command}, {"seed", fmt::format("{}", o.seed)}};
}

void cavity_report(Report& r, const std::string& prefix, const BenchConfig& b, const CavitySpec& c) {
  const auto d = derive_cavity(c, b.pump_chain.fundamental.wavelength(), c.operating_temperature);
  r.add(prefix + ".fsr_hz", d.fsr);
  r.add(prefix + ".finesse", d.finesse);
  r.add(prefix + ".linewidth_fwhm_hz", d.linewidth_fwhm);
  r.add(prefix + ".decay_rate_hwhm_rad_per_s", d.decay_rate_hwhm);
  r.add(prefix + ".escape_efficiency", d.escape_efficiency);
  if (c.crystal.poling_period_at_ref) r.add(prefix + ".poling_period_m", *c.crystal.poling_period_at_ref);
}

void write_manifest(const fs::path& dir, const Options& o, const BenchConfig& bench, const Report& report) {
  ConfigDocument doc = bench.document;
  doc.entries.push_back({"run", "command", o.command});
  doc.entries.push_back({"run", "tool_version", tool_version});
  doc.entries.push_back({"run", "seed", fmt::format("{}", o.seed)});
  doc.entries.push_back({"run", "config_source", bench.document.source});
  for (std::size_t i = 0; i < o.extra_args.size(); ++i)
    doc.entries.push_back({"run", fmt::format("arg_{}", i + 1), o.extra_args[i]});
  Report derived;
  cavity_report(derived, "opo_cavity", bench, bench.opo_cavity);
  cavity_report(derived, "shg_cavity", bench, bench.shg_cavity);
  derived.add("detection.escape_efficiency", bench.detection.escape_efficiency);
  derived.add("detection.escape_efficiency_source", bench.escape_efficiency_derived ? "derived" : "config");
  derived.add("operating_point.decay_rate_rad_per_s", bench.operating_point.decay_rate);
  derived.add("operating_point.decay_rate_source", bench.decay_rate_derived ? "derived" : "config");
  derived.add("detection.total_efficiency", bench.detection.total_efficiency());
  for (const auto& [k, v] : derived.rows) doc.entries.push_back({"derived", k, v});
  for (const auto& [k, v] : report.rows) doc.entries.push_back({"derived", "result." + k, v});
  write_file(dir / (o.command + ".manifest.ini"), [&](std::ostream& out) {
    out << "# sqzsim run manifest; load with --config (or use replay) to repeat the run\n";
    write_config_document(out, doc);
  });
}

void print_report(std::ostream& out, const Report& r) {
  for (const auto& [k, v] : r.rows) fmt::print(out, "{} = {}\n", k, v);
}

// Zero crossing of the squeezed trace nearest the bottom of the band, interpolated in log f.
std::optional<double> zero_crossing(const NoiseTrace& t) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double a = to_decibels(t.values[i - 1]);
    const double b = to_decibels(t.values[i]);
    if ((a >= 0.0) != (b >= 0.0)) {
      const double u = a / (a - b);
      return std::exp(std::log(t.axis[i - 1]) + u * (std::log(t.axis[i]) - std::log(t.axis[i - 1])));
    }
  }
  return std::nullopt;
}

int cmd_spectrum(const Options& o, const BenchConfig& bench, std::ostream& out) {
  const auto& m = bench.measurement;
  const double start = o.start_hz > 0.0 ? o.start_hz : m.spectrum_start;
  const double stop = o.stop_hz > 0.0 ? o.stop_hz : m.spectrum_stop;
  const std::size_t points = o.points > 0 ? o.points : m.spectrum_points;
  auto spectra = broadband_spectrum(bench, m, start, stop, points, o.seed);
  auto anti = detected_spectrum(bench, spectra.squeezed.axis, pi / 2.0).subtracted;
  auto electronic = electronic_trace(bench, spectra.squeezed.axis);

  Report r;
  const NoiseModel model = bench.noise_model();
  r.add("squeezing_at_center_db", to_decibels(detected_variance(model, m.center_frequency, 0.0, false)));
  r.add("antisqueezing_at_center_db", to_decibels(detected_variance(model, m.center_frequency, pi / 2.0, false)));
  r.add("center_frequency_hz", m.center_frequency);
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < spectra.squeezed.size(); ++i) {
    if (spectra.squeezed.axis[i] < o.band_start_hz || i == spectra.dither_bin || i == spectra.dither_harmonic_bin)
      continue;
    const double db = to_decibels(spectra.squeezed.values[i]);
    lo = std::min(lo, db);
    hi = std::max(hi, db);
  }
  if (hi >= lo) {
    r.add("band_start_hz", o.band_start_hz);
    r.add("band_min_db", lo);
    r.add("band_max_db", hi);
  }
  if (auto z = zero_crossing(spectra.squeezed)) r.add("zero_crossing_hz", *z);
  else r.add("zero_crossing_hz", "none");
  if (spectra.dither_bin < points) r.add("dither_line_hz", spectra.squeezed.axis[spectra.dither_bin]);
  if (spectra.dither_harmonic_bin < points)
    r.add("dither_harmonic_line_hz", spectra.squeezed.axis[spectra.dither_harmonic_bin]);

  const auto dir = prepare_out_dir(o);
  const std::vector<NoiseTrace> traces{spectra.shot, spectra.squeezed_raw, spectra.squeezed, anti, electronic};
  write_file(dir / "spectrum.csv", [&](std::ostream& f) { write_trace_csv(f, traces, run_metadata(o)); });
  write_manifest(dir, o, bench, r);
  print_report(out, r);
  return ok;
}

int cmd_zero_span(const Options& o, const BenchConfig& bench, std::ostream& out) {
  const auto& m = bench.measurement;
  const double duration = o.duration > 0.0 ? o.duration : m.sweep_time;
  const auto trace = zero_span_trace(bench, m, duration, o.seed);
  const auto [mn, mx] = std::minmax_element(trace.values.begin(), trace.values.end());
  const NoiseModel model = bench.noise_model();
  Report r;
  r.add("trace_min_db", to_decibels(*mn));
  r.add("trace_max_db", to_decibels(*mx));
  r.add("v_minus_db", to_decibels(detected_variance(model, m.center_frequency, 0.0, false)));
  r.add("v_plus_db", to_decibels(detected_variance(model, m.center_frequency, pi / 2.0, false)));
  r.add("samples", static_cast<double>(trace.size()));
  for (const auto& w : trace.warnings) r.add("warning", w);
  const auto dir = prepare_out_dir(o);
  write_file(dir / "zero_span.csv", [&](std::ostream& f) { write_timeseries_csv(f, trace, run_metadata(o)); });
  write_manifest(dir, o, bench, r);
  print_report(out, r);
  return ok;
}

const CavitySpec& pick_cavity(const Options& o, const BenchConfig& bench) {
  if (o.crystal == "opo") return bench.opo_cavity;
  if (o.crystal == "shg") return bench.shg_cavity;
  throw Error(ErrorKind::argument, fmt::format("--crystal must be opo or shg, got '{}'", o.crystal));
}

int cmd_tuning(const Options& o, const BenchConfig& bench, std::ostream& out) {
  const auto& cav = pick_cavity(o, bench);
  const double t0 = cav.operating_temperature.value;
  const auto curve = tuning_curve(cav.crystal, bench.pump_chain.fundamental, Celsius{t0 - bench.tuning.half_span},
                                  Celsius{t0 + bench.tuning.half_span}, bench.tuning.samples);
  Report r;
  r.add("crystal", o.crystal);
  r.add("material", to_string(cav.crystal.material));
  r.add("phase_matching", to_string(cav.crystal.phase_matching));
  r.add("length_m", cav.crystal.length);
  r.add("fwhm_k", curve.fwhm);
  r.add("center_temperature_c", curve.center_temperature.value);
  r.add("lower_half_max_c", curve.lower_half_max.value);
  r.add("upper_half_max_c", curve.upper_half_max.value);
  const auto dir = prepare_out_dir(o);
  write_file(dir / "tuning.csv", [&](std::ostream& f) {
    for (const auto& [k, v] : run_metadata(o)) fmt::print(f, "# {} = {}\n", k, v);
    for (const auto& [k, v] : r.rows) fmt::print(f, "# {} = {}\n", k, v);
    f << "temperature_c,normalized_efficiency\n";
    for (std::size_t i = 0; i < curve.temperatures.size(); ++i)
      fmt::print(f, "{},{}\n", curve.temperatures[i], curve.normalized_efficiency[i]);
  });
  write_manifest(dir, o, bench, r);
  print_report(out, r);
  return ok;
}

double default_waist(const CavitySpec& c, double wavelength) { return c.waist ? *c.waist : cavity_waist(c, wavelength); }

int cmd_threshold(const Options& o, const BenchConfig& bench, std::ostream& out) {
  const auto& cav = bench.opo_cavity;
  const auto& fund = bench.pump_chain.fundamental;
  const double waist = default_waist(cav, fund.wavelength());
  const auto spc = single_pass_conversion(cav.crystal, fund, waist, cav.operating_temperature,
                                          bench.solver.quadrature_abs_tolerance);
  const double pth = opo_threshold(cav, spc.e_nl);
  Report r;
  r.add("waist_m", waist);
  r.add("focus_parameter_xi", spc.xi);
  r.add("phase_parameter_sigma", spc.sigma);
  r.add("boyd_kleinman_h", spc.h);
  r.add("e_nl_per_w", spc.e_nl);
  if (spc.out_of_validated_range) r.add("warning", "focusing parameter outside the validated range");
  r.add("threshold_w", pth);
  if (bench.pump_chain.delivery_efficiency) {
    const double delivered = *bench.pump_chain.delivery_efficiency * bench.pump_chain.harmonic.power();
    r.add("delivered_pump_w", delivered);
    const double x = pump_parameter_from_power(cav, spc.e_nl, delivered);
    r.add("pump_parameter_from_power", x);
    if (x >= 1.0) r.add("warning", "delivered pump is at or above threshold");
  } else {
    r.add("delivered_pump_w", "unknown (pump_chain.delivery_efficiency not set)");
  }
  const auto dir = prepare_out_dir(o);
  write_file(dir / "threshold.csv", [&](std::ostream& f) {
    for (const auto& [k, v] : run_metadata(o)) fmt::print(f, "# {} = {}\n", k, v);
    f << "quantity,value\n";
    for (const auto& [k, v] : r.rows) fmt::print(f, "{},{}\n", k, v);
  });
  write_manifest(dir, o, bench, r);
  print_report(out, r);
  return ok;
}

int cmd_shg(const Options& o, const BenchConfig& bench, std::ostream& out) {
  const auto& cav = bench.shg_cavity;
  const auto& fund = bench.pump_chain.fundamental;
  const double p_in = fund.power();
  const double p_out = bench.pump_chain.harmonic.power();
  const double e_fit = fit_shg_nonlinearity(cav, p_in, p_out, bench.solver);
  const auto sol = shg_output(cav, e_fit, p_in, bench.solver);
  const double waist = default_waist(cav, fund.wavelength());
  const auto pred = single_pass_conversion(cav.crystal, fund, waist, cav.operating_temperature,
                                           bench.solver.quadrature_abs_tolerance);
  Report r;
  r.add("pump_in_w", p_in);
  r.add("target_harmonic_w", p_out);
  r.add("e_nl_fitted_per_w", e_fit);
  r.add("harmonic_out_w", sol.harmonic_out);
  r.add("circulating_w", sol.circulating);
  r.add("reflected_w", sol.reflected);
  r.add("solver_iterations", static_cast<double>(sol.iterations));
  r.add("waist_m", waist);
  r.add("focus_parameter_xi", pred.xi);
  r.add("e_nl_predicted_per_w", pred.e_nl);
  r.add("fitted_over_predicted", e_fit / pred.e_nl);
  const auto dir = prepare_out_dir(o);
  write_file(dir / "shg.csv", [&](std::ostream& f) {
    for (const auto& [k, v] : run_metadata(o)) fmt::print(f, "# {} = {}\n", k, v);
    for (const auto& [k, v] : r.rows) fmt::print(f, "# {} = {}\n", k, v);
    f << "pump_w,circulating_w,harmonic_w\n";
    const int n = 30;
    for (int i = 0; i <= n; ++i) {
      const double p = 1.5 * p_in * i / n;
      const auto s = shg_output(cav, e_fit, p, bench.solver);
      fmt::print(f, "{},{},{}\n", p, s.circulating, s.harmonic_out);
    }
  });
  write_manifest(dir, o, bench, r);
  print_report(out, r);
  return ok;
}

int cmd_lock(const Options& o, const BenchConfig& bench, std::ostream& out) {
  const auto& m = bench.measurement;
  const double duration = o.duration > 0.0 ? o.duration : m.lock_duration;
  const auto result = noise_lock_simulate(bench, m, o.initial_angle, duration, o.seed);
  BenchConfig locked = bench;
  locked.operating_point.squeeze_angle_rms_jitter = result.residual_rms;
  auto spectra = broadband_spectrum(locked, m, m.spectrum_start, m.spectrum_stop, m.spectrum_points, o.seed);
  Report r;
  r.add("initial_angle_rad", o.initial_angle);
  r.add("locked", result.locked ? "true" : "false");
  r.add("residual_rms_rad", result.residual_rms);
  r.add("final_angle_rad", result.final_angle);
  r.add("diagnostic", result.diagnostic);
  const std::size_t n = spectra.squeezed.size();
  r.add("dither_line_hz", spectra.dither_bin < n ? fmt::format("{:.10g}", spectra.squeezed.axis[spectra.dither_bin])
                                                 : std::string("none"));
  r.add("dither_harmonic_line_hz", spectra.dither_harmonic_bin < n
                                       ? fmt::format("{:.10g}", spectra.squeezed.axis[spectra.dither_harmonic_bin])
                                       : std::string("none"));
  const auto dir = prepare_out_dir(o);
  write_file(dir / "lock.csv", [&](std::ostream& f) { write_timeseries_csv(f, result.angle_timeseries, run_metadata(o)); });
  const std::vector<NoiseTrace> traces{spectra.shot, spectra.squeezed};
  write_file(dir / "lock_spectrum.csv", [&](std::ostream& f) { write_trace_csv(f, traces, run_metadata(o)); });
  write_manifest(dir, o, bench, r);
  print_report(out, r);
  return ok;
}

int cmd_fit(const Options& o, const BenchConfig& bench, std::ostream& out, std::ostream& err) {
  if (o.observed.empty()) throw Error(ErrorKind::argument, "fit needs --observed <csv>");
  FitProblem p;
  p.observed = import_measured_traces(o.observed);
  p.fixed = bench;
  p.seed = o.seed;
  const std::vector<std::string> free =
      o.free.empty() ? std::vector<std::string>{"pump_parameter", "scatter_amplitude"} : o.free;
  for (const auto& f : free) p.free_parameters.push_back(parse_parameter_bound(f));
  const auto result = fit_spectrum(p);
  Report r;
  r.add("objective", result.objective);
  r.add("converged", result.converged ? "true" : "false");
  for (const auto& [k, v] : result.best_values) r.add(k, v);
  r.add("total_efficiency", result.fitted.detection.total_efficiency());
  for (const auto& t : p.observed)
    for (const auto& w : t.warnings) r.add("warning", w);
  const auto dir = prepare_out_dir(o);
  write_file(dir / "fit_report.ini", [&](std::ostream& f) { write_fit_report(f, p, result); });
  write_file(dir / "fit_residuals.csv",
             [&](std::ostream& f) { write_trace_csv(f, result.residual_traces, run_metadata(o)); });
  write_file(dir / "fitted_config.ini", [&](std::ostream& f) { write_config_document(f, result.fitted.document); });
  write_manifest(dir, o, bench, r);
  print_report(out, r);
  if (!result.converged) {
    error_record(err, "solver", solver_error, "fit did not converge within the evaluation budget; best-so-far written");
    return solver_error;
  }
  return ok;
}

int cmd_budget(const Options& o, const BenchConfig& bench, std::ostream& out) {
  const auto b = loss_budget(bench, o.target_db);
  Report r;
  r.add("total_efficiency", b.total_efficiency);
  r.add("target_db", b.target_db);
  const auto& last = b.rows.back();
  r.add("max_squeezing_db", last.max_squeezing_db);
  if (last.pump_parameter_for_target) r.add("pump_parameter_for_target", *last.pump_parameter_for_target);
  else r.add("pump_parameter_for_target", "unattainable");
  const auto dir = prepare_out_dir(o);
  write_file(dir / "budget.csv", [&](std::ostream& f) {
    for (const auto& [k, v] : run_metadata(o)) fmt::print(f, "# {} = {}\n", k, v);
    f << "stage,efficiency,cumulative_efficiency,max_squeezing_db,capped,pump_parameter_for_target\n";
    for (const auto& row : b.rows)
      fmt::print(f, "{},{},{},{},{},{}\n", row.stage, row.efficiency, row.cumulative_efficiency, row.max_squeezing_db,
                 row.capped ? "true" : "false",
                 row.pump_parameter_for_target ? fmt::format("{}", *row.pump_parameter_for_target) : "unattainable");
  });
  write_manifest(dir, o, bench, r);
  print_report(out, r);
  return ok;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, fmt::format("cannot open {}", path));
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Arguments reconstructing the run recorded in a manifest.
std::vector<std::string> replay_arguments(const Options& o) {
  const auto doc = parse_config_document(read_text(o.manifest), o.manifest);
  const auto* command = doc.find("run", "command");
  if (!command) throw Error(ErrorKind::validation, fmt::format("{} has no [run] command; not a manifest", o.manifest));
  if (command->value == "replay") throw Error(ErrorKind::validation, "a manifest cannot replay a replay");
  std::vector<std::string> args{command->value, "--config", o.manifest, "--out", o.out};
  if (const auto* seed = doc.find("run", "seed")) {
    args.push_back("--seed");
    args.push_back(seed->value);
  }
  for (int i = 1;; ++i) {
    const auto* a = doc.find("run", fmt::format("arg_{}", i));
    if (!a) break;
    args.push_back(a->value);
  }
  return args;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "bench configuration file")->required();
  sub->add_option("--out", o.out, "output directory (created if missing)");
  sub->add_option("--set", o.sets, "override section.key=value (repeatable)");
  sub->add_option("--seed", o.seed, "seed for every random stream");
}

// Subcommand-specific flags that the manifest must record to repeat the run.
void collect_extras(const CLI::App* sub, Options& o) {
  static const std::vector<std::string> common{"--config", "--out", "--set", "--seed", "--help"};
  for (const auto* opt : sub->get_options()) {
    const std::string name = opt->get_name();
    if (opt->count() == 0 || std::find(common.begin(), common.end(), name) != common.end()) continue;
    for (const auto& v : opt->results()) {
      o.extra_args.push_back(name);
      o.extra_args.push_back(v);
    }
  }
}

int dispatch(Options& o, std::ostream& out, std::ostream& err) {
  const BenchConfig bench = load_bench_config_file(o.config, o.sets);
  if (o.command == "spectrum") return cmd_spectrum(o, bench, out);
  if (o.command == "zero-span") return cmd_zero_span(o, bench, out);
  if (o.command == "tuning") return cmd_tuning(o, bench, out);
  if (o.command == "threshold") return cmd_threshold(o, bench, out);
  if (o.command == "shg") return cmd_shg(o, bench, out);
  if (o.command == "lock") return cmd_lock(o, bench, out);
  if (o.command == "fit") return cmd_fit(o, bench, out, err);
  if (o.command == "budget") return cmd_budget(o, bench, out);
  throw Error(ErrorKind::argument, fmt::format("unknown subcommand '{}'", o.command));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Squeezed-vacuum bench simulator", "sqzsim"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", tool_version);

  std::vector<CLI::App*> subs;
  auto add = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    subs.push_back(s);
    return s;
  };
  auto* spectrum = add("spectrum", "broadband squeezed and shot-noise spectra");
  add_common(spectrum, o);
  spectrum->add_option("--start-hz", o.start_hz, "lowest frequency");
  spectrum->add_option("--stop-hz", o.stop_hz, "highest frequency");
  spectrum->add_option("--points", o.points, "number of log-spaced samples");
  spectrum->add_option("--band-start-hz", o.band_start_hz, "lower edge of the reported flat band");

  auto* zero = add("zero-span", "scanned-angle trace at the center frequency");
  add_common(zero, o);
  zero->add_option("--duration", o.duration, "trace length in s (default: sweep time)");

  auto* tuning = add("tuning", "phase-matching temperature tuning curve");
  add_common(tuning, o);
  tuning->add_option("--crystal", o.crystal, "opo or shg")->check(CLI::IsMember({"opo", "shg"}));

  add_common(add("threshold", "OPO single-pass nonlinearity and oscillation threshold"), o);
  add_common(add("shg", "SHG nonlinearity fitted to the pump-chain power point"), o);

  auto* lock = add("lock", "noise-lock servo simulation and locked spectrum");
  add_common(lock, o);
  lock->add_option("--initial-angle", o.initial_angle, "starting squeeze angle in rad");
  lock->add_option("--duration", o.duration, "simulated time in s (default: measurement.lock_duration)");

  auto* fit = add("fit", "least-squares fit of free parameters to measured traces");
  add_common(fit, o);
  fit->add_option("--observed", o.observed, "trace CSV to fit")->required();
  fit->add_option("--free", o.free, "free parameter, name or name:lower:upper (repeatable)");

  auto* budget = add("budget", "efficiency chain and attainable squeezing");
  add_common(budget, o);
  budget->add_option("--target-db", o.target_db, "squeezing level the pump must reach");

  auto* replay = add("replay", "repeat the run recorded in a manifest");
  replay->add_option("--manifest", o.manifest, "manifest written by an earlier run")->required();
  replay->add_option("--out", o.out, "output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::CallForVersion&) {
    out << tool_version << '\n';
    return ok;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    error_record(err, "argument", argument_error, e.what());
    return argument_error;
  }

  for (auto* s : subs) {
    if (s->parsed()) {
      o.command = s->get_name();
      collect_extras(s, o);
    }
  }
  try {
    if (o.command == "replay") return run(replay_arguments(o), out, err);
    return dispatch(o, out, err);
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) error_record(err, "validation", validation_error, v);
    return validation_error;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    error_record(err, to_string(e.kind()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    error_record(err, "internal", 1, e.what());
    return 1;
  }
}

}  // namespace sqz::cli
