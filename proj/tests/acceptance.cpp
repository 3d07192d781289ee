// One PASS/FAIL line per acceptance criterion. Exit status counts failures that are not
// listed in known_red; those are reported as FAIL with their analysis in README.md.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sqz/cavity.hpp"
#include "sqz/cli.hpp"
#include "sqz/crystal.hpp"
#include "sqz/fit.hpp"
#include "sqz/kernels.hpp"
#include "sqz/measurement.hpp"
#include "sqz/quantum_noise.hpp"
#include "sqz/trace.hpp"
#include "support.hpp"

using namespace sqz;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double runtime_limit;
  std::function<Verdict()> check;
};

const std::set<int> known_red{3, 4};

double db(double v) { return 10.0 * std::log10(v); }

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

std::vector<std::string> cli_args(const std::string& cmd, const fs::path& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> a{cmd, "--config", test::paper_config_path().string(), "--out", dir.string()};
  a.insert(a.end(), extra.begin(), extra.end());
  return a;
}

NoiseTrace cli_trace(const fs::path& csv, TraceKind kind) {
  for (auto& t : parse_measured_traces(test::read_file(csv), csv.string()))
    if (t.kind == kind) return t;
  return {};
}

// 1. Flat-band squeezing from the shipped config.
Verdict headline() {
  const auto dir = test::scratch_dir("acc-1");
  if (run_cli(cli_args("spectrum", dir)) != 0) return {false, "spectrum command failed"};
  const auto t = cli_trace(dir / "spectrum.csv", TraceKind::squeezed_subtracted);
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t.axis[i] >= 30e3 && t.axis[i] <= 100e3) {
      lo = std::min(lo, db(t.values[i]));
      hi = std::max(hi, db(t.values[i]));
    }
  const std::vector<double> f{test::paper_bench().measurement.center_frequency};
  const double center = db(detected_spectrum(test::paper_bench(), f).subtracted.values[0]);
  const bool pass = std::abs(center + 3.8) <= 0.1 && lo >= -3.9 && hi <= -3.7;
  return {pass, fmt::format("900 kHz {:.3f} dB; 30-100 kHz band [{:.3f}, {:.3f}] dB; target -3.8 +- 0.1", center, lo, hi)};
}

// 2. Low-frequency cutoff from the scatter model.
Verdict cutoff() {
  const auto dir = test::scratch_dir("acc-2");
  if (run_cli(cli_args("spectrum", dir)) != 0) return {false, "spectrum command failed"};
  auto t = cli_trace(dir / "spectrum.csv", TraceKind::squeezed_subtracted);
  // the dither lines are narrow injected spikes, not part of the broadband level
  const double fd = test::paper_bench().measurement.dither.frequency;
  for (double line : {2.0 * fd, fd}) {
    const auto k = static_cast<std::ptrdiff_t>(log_bin_index(t.axis, line));
    t.axis.erase(t.axis.begin() + k);
    t.values.erase(t.values.begin() + k);
  }
  std::vector<double> crossings;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double a = db(t.values[i - 1]);
    const double b = db(t.values[i]);
    if ((a > 0.0) != (b > 0.0)) {
      const double u = a / (a - b);
      crossings.push_back(std::exp(std::log(t.axis[i - 1]) + u * (std::log(t.axis[i]) - std::log(t.axis[i - 1]))));
    }
  }
  if (crossings.size() != 1) return {false, fmt::format("{} zero crossings", crossings.size())};
  return {std::abs(crossings[0] - 6e3) <= 1e3, fmt::format("0 dB crossing at {:.1f} Hz; target 6000 +- 1000", crossings[0])};
}

// 3. SHG power point and the single-pass cross-check.
Verdict shg_point() {
  const auto& b = test::paper_bench();
  const auto& c = b.shg_cavity;
  const double e = fit_shg_nonlinearity(c, b.pump_chain.fundamental.power(), b.pump_chain.harmonic.power(), b.solver);
  const double out = shg_output(c, e, b.pump_chain.fundamental.power(), b.solver).harmonic_out;
  const double waist = c.waist ? *c.waist : cavity_waist(c, b.pump_chain.fundamental.wavelength());
  const double predicted =
      single_pass_conversion(c.crystal, b.pump_chain.fundamental, waist, c.operating_temperature).e_nl;
  const double ratio = e / predicted;
  const bool power_ok = std::abs(out - 0.320) <= 1e-3;
  const bool ratio_ok = ratio >= 1.0 / 3.0 && ratio <= 3.0;
  return {power_ok && ratio_ok,
          fmt::format("1.1 W -> {:.4f} W ({}); E_NL fitted {:.4g} /W vs single-pass {:.4g} /W, ratio {:.3f} ({})", out,
                      power_ok ? "ok" : "off", e, predicted, ratio, ratio_ok ? "within 3x" : "outside 3x")};
}

// 4. Temperature acceptance of the OPO crystal and of a 6.5 mm lithium niobate doubler.
Verdict bandwidth() {
  const auto& b = test::paper_bench();
  const auto& pump = b.pump_chain.fundamental;
  const auto& ktp = b.opo_cavity.crystal;
  const double t0 = b.opo_cavity.operating_temperature.value;
  const auto k = tuning_curve(ktp, pump, Celsius{t0 - 15.0}, Celsius{t0 + 15.0}, 401);

  const auto& ln = b.shg_cavity.crystal;
  const double t1 = b.shg_cavity.operating_temperature.value;
  const auto l = tuning_curve(ln, pump, Celsius{t1 - 10.0}, Celsius{t1 + 10.0}, 401);

  // informational: the same length poled for first-order d33 phase matching
  CrystalSpec poled = ln;
  poled.phase_matching = PhaseMatching::quasi;
  poled.fundamental_dispersion.reset();
  poled.poling_period_at_ref = solve_poling_period(poled, pump, Celsius{t1});
  const auto q = tuning_curve(poled, pump, Celsius{t1 - 15.0}, Celsius{t1 + 15.0}, 401);

  const bool ktp_ok = k.fwhm >= 2.5 && k.fwhm <= 10.0;
  const bool ln_ok = l.fwhm < 1.0;
  return {ktp_ok && ln_ok,
          fmt::format("PPKTP 10 mm FWHM {:.3f} K ({}); LiNbO3 6.5 mm type-I FWHM {:.3f} K ({}); poled 6.5 mm {:.3f} K "
                      "(info)",
                      k.fwhm, ktp_ok ? "in [2.5, 10]" : "outside [2.5, 10]", l.fwhm, ln_ok ? "< 1" : "not < 1",
                      q.fwhm)};
}

// 5. Global optimum of the focusing function against the frozen scipy fixture.
Verdict focusing() {
  std::ifstream in(test::source_dir() / "tests" / "fixtures" / "boyd_kleinman_oracle.csv");
  std::string line;
  double ox = 0.0, osig = 0.0, oh = 0.0;
  double worst_sample = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("kind", 0) == 0) continue;
    std::istringstream row(line);
    std::string kind, xs, ss, hs;
    std::getline(row, kind, ',');
    std::getline(row, xs, ',');
    std::getline(row, ss, ',');
    std::getline(row, hs, ',');
    const double x = std::stod(xs), s = std::stod(ss), h = std::stod(hs);
    if (kind == "optimum") {
      ox = x;
      osig = s;
      oh = h;
    } else {
      worst_sample = std::max(worst_sample, std::abs(boyd_kleinman_h(x, s) - h));
    }
  }
  if (oh == 0.0) return {false, "fixture missing"};

  std::vector<double> xi, sigma;
  for (int i = 0; i <= 110; ++i) xi.push_back(0.5 + 0.05 * i);
  for (int j = 0; j <= 75; ++j) sigma.push_back(0.02 * j);
  std::vector<double> grid(xi.size() * sigma.size());
  kernels::boyd_kleinman_grid_parallel(xi, sigma, 1e-9, grid);
  const auto at = static_cast<std::size_t>(std::max_element(grid.begin(), grid.end()) - grid.begin());
  // golden-section refinement in xi, best sigma inside
  double a = xi[std::max<std::size_t>(at / sigma.size(), 1) - 1];
  double c = xi[std::min(at / sigma.size() + 1, xi.size() - 1)];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [](double x) { return boyd_kleinman_best_sigma(x).h; };
  double x1 = c - g * (c - a), x2 = a + g * (c - a);
  double f1 = f(x1), f2 = f(x2);
  while (c - a > 1e-7) {
    if (f1 > f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - g * (c - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (c - a);
      f2 = f(x2);
    }
  }
  const double best_xi = 0.5 * (a + c);
  const auto best = boyd_kleinman_best_sigma(best_xi);
  const bool pass = std::abs(best.h / 1.068 - 1.0) <= 0.01 && std::abs(best_xi / 2.84 - 1.0) <= 0.01 &&
                    std::abs(best.h - oh) < 1e-6 && std::abs(best_xi - ox) < 1e-3 && worst_sample < 1e-8;
  return {pass, fmt::format("max h {:.6f} at xi {:.4f}, sigma {:.4f}; fixture {:.6f} at {:.4f}, {:.4f}; worst sample "
                            "error {:.1e}",
                            best.h, best_xi, best.sigma, oh, ox, osig, worst_sample)};
}

// 6. Quadrature-variance properties over random draws.
Verdict quantum_properties() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(0.0, 0.999), ue(1e-6, 1.0), uw(-4.0, 4.0), uf(1.0001, 1.5);
  const double gamma = test::paper_bench().operating_point.decay_rate;
  std::size_t bad = 0;
  double worst_product = 1e300, worst_far = 0.0;
  for (int i = 0; i < 10000; ++i) {
    SqueezerOperatingPoint op;
    op.pump_parameter = ux(rng);
    op.decay_rate = gamma;
    const double eta = ue(rng);
    const double w = gamma * std::pow(10.0, uw(rng));
    const auto q = quadrature_variances(op, eta, w);
    const double vm = q.minus.linear(), vp = q.plus.linear();
    worst_product = std::min(worst_product, vm * vp);
    if (!(vm <= 1.0 && vp >= 1.0 && vm * vp >= 1.0 - 1e-12)) ++bad;
    const auto far = quadrature_variances(op, eta, 1e6 * gamma);
    const double d = std::max(std::abs(far.minus.linear() - 1.0), std::abs(far.plus.linear() - 1.0));
    worst_far = std::max(worst_far, d);
    if (d >= 1e-6) ++bad;
    const double eta2 = std::min(1.0, eta * uf(rng));
    const auto q2 = quadrature_variances(op, eta2, w);
    if (eta2 > eta && !(q2.minus.linear() <= vm && q2.plus.linear() >= vp)) ++bad;
    if (jitter_averaged_variance(q.minus, q.plus, 0.0, 0.05).linear() < vm) ++bad;
  }
  return {bad == 0, fmt::format("10000 draws, {} violations; min V-V+ {:.15f}; max |V-1| at 1e6 gamma {:.1e}", bad,
                                worst_product, worst_far)};
}

// 7. Closed-form jitter average against Monte Carlo.
Verdict jitter() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> um(-0.3, 0.3), us(0.005, 0.3);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const double mean = um(rng), rms = us(rng);
    const RelativeNoisePower vm(0.4169), vp(2.73);
    const double closed = jitter_averaged_variance(vm, vp, mean, rms).linear();
    std::mt19937_64 mc(1000 + c);
    std::normal_distribution<double> g(mean, rms);
    double sum = 0.0;
    for (int i = 0; i < 1000000; ++i) sum += rotated_variance(vm, vp, g(mc)).linear();
    worst = std::max(worst, std::abs(closed / (sum / 1e6) - 1.0));
  }
  return {worst < 5e-3, fmt::format("20 cases x 1e6 samples; worst relative deviation {:.2e} (limit 5e-3)", worst)};
}

// 8. Lock acquisition and the locked spectrum's lines.
Verdict lock() {
  const auto& b = test::paper_bench();
  const auto& m = b.measurement;
  double worst = 0.0;
  bool all_locked = true;
  bool lines_ok = true;
  for (double a : {0.1, 0.3, 0.5, -0.1, -0.3, -0.5}) {
    const auto r = noise_lock_simulate(b, m, a, m.lock_duration);
    all_locked &= r.locked;
    worst = std::max(worst, r.residual_rms);
    BenchConfig locked = b;
    locked.operating_point.squeeze_angle_rms_jitter = r.residual_rms;
    const auto s = broadband_spectrum(locked, m, m.spectrum_start, m.spectrum_stop, m.spectrum_points);
    auto quiet = m;
    quiet.dither.depth = 0.0;
    const auto q = broadband_spectrum(locked, quiet, m.spectrum_start, m.spectrum_stop, m.spectrum_points);
    std::vector<std::size_t> lines;
    for (std::size_t i = 0; i < s.squeezed.size(); ++i)
      if (s.squeezed.values[i] != q.squeezed.values[i]) lines.push_back(i);
    const auto& f = s.squeezed.axis;
    const std::vector<std::size_t> expected{log_bin_index(f, m.dither.frequency), log_bin_index(f, 2.0 * m.dither.frequency)};
    lines_ok &= lines == expected;
  }
  return {all_locked && worst < 0.05 && lines_ok,
          fmt::format("6 starts {}; worst residual {:.2e} rad (limit 0.05); lines only in the 13.2 and 26.4 kHz bins: {}",
                      all_locked ? "locked" : "NOT all locked", worst, lines_ok ? "yes" : "no")};
}

// 9. Fit round trip on noiseless synthetic spectra.
Verdict fit_round_trip() {
  const std::vector<std::string> names{"pump_parameter", "escape_efficiency", "squeeze_angle_rms_jitter",
                                       "scatter_amplitude", "scatter_exponent"};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(0.1, 0.6), ue(0.85, 0.99), uj(0.01, 0.1), ua(0.05, 0.5), up(2.0, 4.0);
  const auto f = log_spaced(100.0, 300e6, 160);
  double worst = 0.0, worst_single = 0.0;
  int unconverged = 0;
  for (int c = 0; c < 20; ++c) {
    BenchConfig truth = test::paper_bench();
    const std::vector<double> values{ux(rng), ue(rng), uj(rng), ua(rng), up(rng)};
    for (std::size_t i = 0; i < names.size(); ++i) apply_parameter(truth, names[i], values[i]);
    FitProblem p;
    p.observed = {detected_spectrum(truth, f).subtracted, detected_spectrum(truth, f, pi / 2).subtracted};
    p.fixed = test::paper_bench();
    for (const auto& n : names) p.free_parameters.push_back(default_bound(n));
    p.seed = static_cast<std::uint64_t>(c);
    const auto r = fit_spectrum(p);
    unconverged += r.converged ? 0 : 1;
    for (std::size_t i = 0; i < names.size(); ++i)
      worst = std::max(worst, std::abs(r.value(names[i]) / values[i] - 1.0));

    // single free parameter against the closed-form inversion
    BenchConfig plain = truth;
    plain.detection.scatter.amplitude = 0.0;
    plain.operating_point.squeeze_angle_rms_jitter = 0.0;
    FitProblem s;
    s.observed = {detected_spectrum(plain, log_spaced(10e3, 200e3, 40)).subtracted};
    s.fixed = plain;
    apply_parameter(s.fixed, "pump_parameter", 0.5);
    s.free_parameters = {default_bound("pump_parameter")};
    s.seed = static_cast<std::uint64_t>(c);
    const double eta = plain.detection.total_efficiency();
    const double level = quadrature_variances(plain.operating_point, eta, 0.0).minus.decibels();
    worst_single = std::max(worst_single, std::abs(fit_spectrum(s).value("pump_parameter") - infer_pump_parameter(level, eta)));
  }
  return {worst < 0.01 && worst_single < 1e-4 && unconverged == 0,
          fmt::format("20 truths, 5 free; worst relative error {:.2e} (limit 1e-2), {} unconverged; single-parameter "
                      "vs inversion worst {:.1e} (limit 1e-4)",
                      worst, unconverged, worst_single)};
}

// 10. Electronic floor subtraction.
Verdict electronic() {
  const auto& b = test::paper_bench();
  const auto f = log_spaced(100.0, 1e6, 400);
  const auto raw = detected_spectrum(b, f).raw;
  const auto el = electronic_trace(b, f);
  const auto sub = subtract_electronic_noise(raw, el);
  double round = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) round = std::max(round, std::abs(sub.values[i] + el.values[i] - raw.values[i]));

  const std::vector<double> c{1e3, 900e3};
  const auto s = detected_spectrum(b, c);
  double worst = 0.0;
  std::string parts;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double floor = std::pow(10.0, (i == 0 ? -5.1 : -9.2) / 10.0);
    const double expected = db(s.raw.values[i] - floor);
    const double got = db(s.subtracted.values[i]);
    worst = std::max(worst, std::abs(got - expected));
    parts += fmt::format("; {:.0f} Hz raw {:.4f} dB, subtracted {:.4f} dB", c[i], db(s.raw.values[i]), got);
  }
  return {round <= 1e-12 && worst <= 1e-12,
          fmt::format("round trip {:.1e}; deviation from linear oracle {:.1e} dB{}", round, worst, parts)};
}

// 11. Byte-identical artifacts for a fixed seed.
Verdict determinism() {
  const auto anchors = (test::source_dir() / "configs" / "squeezing-anchors.csv").string();
  const std::vector<std::vector<std::string>> runs{
      {"spectrum", "--set", "measurement.trace_noise=true"},
      {"zero-span", "--set", "measurement.trace_noise=true"},
      {"tuning"},
      {"threshold"},
      {"shg"},
      {"lock"},
      {"fit", "--observed", anchors, "--free", "pump_parameter", "--free", "scatter_amplitude"},
      {"budget"},
  };
  std::size_t files = 0, mismatched = 0;
  for (const auto& r : runs) {
    std::vector<std::string> extra(r.begin() + 1, r.end());
    extra.insert(extra.end(), {"--seed", "42"});
    const auto a = test::scratch_dir("acc-11a-" + r[0]);
    const auto b = test::scratch_dir("acc-11b-" + r[0]);
    if (run_cli(cli_args(r[0], a, extra)) != 0 || run_cli(cli_args(r[0], b, extra)) != 0)
      return {false, r[0] + " failed"};
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      const std::hash<std::string> hash;
      if (hash(test::read_file(e.path())) != hash(test::read_file(b / e.path().filename()))) ++mismatched;
    }
  }
  return {mismatched == 0 && files > 0, fmt::format("{} artifacts from 8 subcommands, {} hash mismatches", files, mismatched)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "headline squeezing", 1.0, headline},
      {2, "scatter cutoff", 1.0, cutoff},
      {3, "SHG power point", 1.0, shg_point},
      {4, "temperature bandwidth", 5.0, bandwidth},
      {5, "focusing optimum", 10.0, focusing},
      {6, "quantum-noise properties", 5.0, quantum_properties},
      {7, "jitter oracle", 30.0, jitter},
      {8, "noise lock", 30.0, lock},
      {9, "fit round trip", 60.0, fit_round_trip},
      {10, "electronic noise", 1.0, electronic},
      {11, "determinism", 5.0, determinism},
  };
  int unexpected = 0;
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.runtime_limit;
    const bool pass = v.pass && in_time;
    if (!pass) {
      ++failed;
      if (!known_red.count(c.id)) ++unexpected;
    }
    std::printf("criterion %2d %-25s %s  %s [%.3f s, limit %.0f s%s]%s\n", c.id, c.name, pass ? "PASS" : "FAIL",
                v.detail.c_str(), secs, c.runtime_limit, in_time ? "" : ", TOO SLOW",
                !pass && known_red.count(c.id) ? " (known red)" : "");
    std::fflush(stdout);
  }
  std::printf("acceptance: %d of %zu PASS, %d FAIL (%d unexpected)\n", static_cast<int>(criteria.size()) - failed,
              criteria.size(), failed, unexpected);
  return unexpected;
}
