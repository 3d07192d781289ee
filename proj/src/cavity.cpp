#include "sqz/cavity.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "sqz/errors.hpp"

namespace sqz {

std::vector<std::string> CavitySpec::violations(const std::string& prefix) const {
  std::vector<std::string> v = crystal.violations(prefix + ".crystal");
  auto in_unit = [&](double t, const char* name) {
    if (!(t >= 0.0 && t <= 1.0)) v.push_back(fmt::format("{}.{} must be in [0, 1] (got {})", prefix, name, t));
  };
  in_unit(input_coupler.t_fundamental, "input_coupler.t_fundamental");
  in_unit(input_coupler.t_harmonic, "input_coupler.t_harmonic");
  in_unit(output_coupler.t_fundamental, "output_coupler.t_fundamental");
  in_unit(output_coupler.t_harmonic, "output_coupler.t_harmonic");
  if (!(intracavity_loss_round_trip >= 0.0 && intracavity_loss_round_trip < 1.0))
    v.push_back(fmt::format("{}.intracavity_loss_round_trip must be in [0, 1) (got {})", prefix,
                            intracavity_loss_round_trip));
  const double total = input_coupler.t_fundamental + output_coupler.t_fundamental + intracavity_loss_round_trip;
  if (!(total < 1.0)) v.push_back(fmt::format("{}: round-trip loss plus transmissions must be < 1 (got {})", prefix, total));
  if (!(geometric_length_one_way >= crystal.length))
    v.push_back(fmt::format("{}.geometric_length ({} m) must be >= crystal length ({} m)", prefix,
                            geometric_length_one_way, crystal.length));
  if (!(mode_matching >= 0.0 && mode_matching <= 1.0))
    v.push_back(fmt::format("{}.mode_matching must be in [0, 1] (got {})", prefix, mode_matching));
  if (!(pump_enhancement > 0.0))
    v.push_back(fmt::format("{}.pump_enhancement must be > 0 (got {})", prefix, pump_enhancement));
  if (waist && !(*waist > 0.0)) v.push_back(fmt::format("{}.waist must be > 0 (got {} m)", prefix, *waist));
  return v;
}

CavityDerived derive_cavity(const CavitySpec& cavity, double wavelength_m, Celsius temperature) {
  const double n = fundamental_index(cavity.crystal, wavelength_m, temperature);
  const double lc = cavity.crystal.length;
  const double total_loss =
      cavity.input_coupler.t_fundamental + cavity.output_coupler.t_fundamental + cavity.intracavity_loss_round_trip;
  if (!(total_loss > 0.0)) throw Error(ErrorKind::domain, "cavity has zero round-trip loss; linewidth is degenerate");
  const double escape_denominator = cavity.output_coupler.t_fundamental + cavity.intracavity_loss_round_trip;
  if (!(cavity.output_coupler.t_fundamental > 0.0))
    throw Error(ErrorKind::domain, "cavity output coupler transmits nothing; escape efficiency is zero");

  CavityDerived d;
  d.round_trip_path = 2.0 * ((cavity.geometric_length_one_way - lc) + n * lc);
  d.fsr = speed_of_light / d.round_trip_path;
  d.finesse = 2.0 * pi / total_loss;
  d.linewidth_fwhm = d.fsr / d.finesse;
  d.decay_rate_hwhm = pi * d.linewidth_fwhm;
  d.escape_efficiency = cavity.output_coupler.t_fundamental / escape_denominator;
  return d;
}

double boyd_kleinman_h(double xi, double sigma, double abs_tolerance) {
  if (!(xi > 0.0) || !std::isfinite(xi))
    throw Error(ErrorKind::domain, fmt::format("focusing parameter xi must be > 0, got {}", xi));
  using integrator = boost::math::quadrature::gauss_kronrod<double, 31>;
  // |integrand| <= 1/sqrt(1 + t^2), so its L1 norm is at most 2 asinh(xi)
  const double rel = abs_tolerance / (2.0 * std::asinh(xi));
  auto re = [sigma](double t) { return (std::cos(sigma * t) + t * std::sin(sigma * t)) / (1.0 + t * t); };
  auto im = [sigma](double t) { return (std::sin(sigma * t) - t * std::cos(sigma * t)) / (1.0 + t * t); };
  double err_re = 0.0;
  double err_im = 0.0;
  const double ire = integrator::integrate(re, -xi, xi, 40, rel, &err_re);
  const double iim = integrator::integrate(im, -xi, xi, 40, rel, &err_im);
  if (err_re > abs_tolerance || err_im > abs_tolerance)
    throw Error(ErrorKind::solver, fmt::format("Boyd-Kleinman quadrature did not reach {} (errors {}, {})",
                                               abs_tolerance, err_re, err_im));
  return (ire * ire + iim * iim) / (4.0 * xi);
}

FocusingOptimum boyd_kleinman_best_sigma(double xi, double abs_tolerance) {
  auto neg = [&](double s) { return -boyd_kleinman_h(xi, s, abs_tolerance); };
  auto [s, f] = boost::math::tools::brent_find_minima(neg, 0.0, 3.0, 40);
  return {s, -f};
}

double cavity_waist(const CavitySpec& cavity, double wavelength_m) {
  const double n = fundamental_index(cavity.crystal, wavelength_m, cavity.operating_temperature);
  const double lc = cavity.crystal.length;
  const double d = (cavity.geometric_length_one_way - lc) + lc / n;
  const double g1 = 1.0 - d / cavity.mirror_curvatures[0];
  const double g2 = 1.0 - d / cavity.mirror_curvatures[1];
  const double g = g1 * g2;
  if (!(g > 0.0 && g < 1.0))
    throw Error(ErrorKind::configuration,
                fmt::format("resonator is not stable (g1 g2 = {}); no TEM00 waist", g));
  const double w2 = wavelength_m * d / pi * std::sqrt(g * (1.0 - g)) / std::abs(g1 + g2 - 2.0 * g);
  return std::sqrt(w2);
}

SinglePassConversion single_pass_conversion(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental,
                                            double waist_m, Celsius temperature, double abs_tolerance) {
  if (!(waist_m > 0.0)) throw Error(ErrorKind::domain, fmt::format("waist must be > 0, got {} m", waist_m));
  const double lambda = fundamental.wavelength();
  const double n1 = fundamental_index(crystal, lambda, temperature);
  const double n2 = harmonic_index(crystal, lambda / 2.0, temperature);
  const double rayleigh = pi * waist_m * waist_m * n1 / lambda;

  SinglePassConversion out;
  out.xi = crystal.length / (2.0 * rayleigh);
  out.out_of_validated_range = out.xi > 1e3;
  const auto best = boyd_kleinman_best_sigma(out.xi, abs_tolerance);
  out.sigma = best.sigma;
  out.h = best.h;

  const double d = crystal.d_eff * 1e-12;
  out.e_nl = 16.0 * pi * pi * d * d * crystal.length * out.h /
             (vacuum_permittivity * speed_of_light * lambda * lambda * lambda * n1 * n2);
  return out;
}

double harmonic_output_fraction(const CavitySpec& cavity) {
  const double total = cavity.input_coupler.t_harmonic + cavity.output_coupler.t_harmonic;
  return total > 0.0 ? cavity.input_coupler.t_harmonic / total : 0.0;
}

ShgSolution shg_output(const CavitySpec& cavity, double e_nl, double pump_in, const SolverSettings& solver) {
  if (!(pump_in >= 0.0)) throw Error(ErrorKind::domain, fmt::format("pump power must be >= 0, got {} W", pump_in));
  if (!(e_nl >= 0.0)) throw Error(ErrorKind::domain, fmt::format("E_NL must be >= 0, got {} /W", e_nl));
  ShgSolution s;
  if (pump_in == 0.0) return s;

  const double t_in = cavity.input_coupler.t_fundamental;
  const double r_in = 1.0 - t_in;
  const double linear = cavity.output_coupler.t_fundamental + cavity.intracavity_loss_round_trip;
  const double coupled = cavity.mode_matching * pump_in;

  auto round_trip = [&](double p) { return std::max(0.0, 1.0 - linear - e_nl * p); };
  auto buildup = [&](double p) {
    const double denom = 1.0 - std::sqrt(r_in * round_trip(p));
    return t_in * coupled / (denom * denom);
  };

  // Fixed-point iteration damped by the secant slope of the map; the map is decreasing in p.
  double p = buildup(0.0);
  double f = buildup(p);
  double p_prev = 0.0;
  double f_prev = p;
  int it = 0;
  double residual = std::abs(f - p) / std::max(p, 1e-300);
  while (residual >= solver.shg_relative_tolerance) {
    if (++it > solver.shg_max_iterations)
      throw Error(ErrorKind::solver,
                  fmt::format("SHG impedance iteration did not converge in {} steps (residual {})",
                              solver.shg_max_iterations, residual));
    double damping = 1.0;
    if (p != p_prev) {
      const double slope = (f - f_prev) / (p - p_prev);
      if (std::isfinite(slope) && slope < 1.0) damping = std::clamp(1.0 / (1.0 - slope), 1e-3, 1.0);
    }
    p_prev = p;
    f_prev = f;
    p = p + damping * (f - p);
    f = buildup(p);
    residual = std::abs(f - p) / std::max(p, 1e-300);
  }

  s.circulating = p;
  s.iterations = it;
  s.residual = residual;
  s.harmonic_generated = e_nl * p * p;
  s.harmonic_out = s.harmonic_generated * harmonic_output_fraction(cavity);
  s.transmitted = p * cavity.output_coupler.t_fundamental;
  s.lost = p * cavity.intracavity_loss_round_trip;
  const double r = std::sqrt(r_in);
  const double rt = std::sqrt(round_trip(p));
  const double refl_amp = (r - rt) / (1.0 - r * rt);
  s.reflected = (pump_in - coupled) + coupled * refl_amp * refl_amp;
  return s;
}

double fit_shg_nonlinearity(const CavitySpec& cavity, double pump_in, double target_harmonic,
                            const SolverSettings& solver) {
  if (!(target_harmonic > 0.0 && pump_in > 0.0))
    throw Error(ErrorKind::argument, "E_NL fit needs positive pump and target harmonic powers");
  auto out = [&](double e) { return shg_output(cavity, e, pump_in, solver).harmonic_out; };

  // log-spaced scan finds the first crossing on the ascending branch, then bisect in log E
  constexpr double e_min = 1e-9;
  constexpr int per_decade = 10;
  double lo = e_min;
  double best = 0.0;
  double hi = 0.0;
  for (int i = 1; i <= 9 * per_decade; ++i) {
    const double e = e_min * std::pow(10.0, static_cast<double>(i) / per_decade);
    const double h = out(e);
    best = std::max(best, h);
    if (h >= target_harmonic) {
      hi = e;
      break;
    }
    lo = e;
  }
  if (hi == 0.0)
    throw Error(ErrorKind::infeasible,
                fmt::format("no E_NL reaches {} W of harmonic from {} W (best {} W)", target_harmonic, pump_in, best));
  for (int i = 0; i < 200 && hi / lo - 1.0 > 1e-13; ++i) {
    const double mid = std::sqrt(lo * hi);
    (out(mid) >= target_harmonic ? hi : lo) = mid;
  }
  return std::sqrt(lo * hi);
}

double opo_threshold(const CavitySpec& cavity, double e_nl) {
  if (!(e_nl > 0.0)) throw Error(ErrorKind::domain, fmt::format("OPO threshold needs E_NL > 0, got {} /W", e_nl));
  const double loss =
      cavity.output_coupler.t_fundamental + cavity.intracavity_loss_round_trip + cavity.input_coupler.t_fundamental;
  return loss * loss / (4.0 * e_nl);
}

double pump_parameter_from_power(const CavitySpec& cavity, double e_nl, double pump_power) {
  if (!(pump_power >= 0.0)) throw Error(ErrorKind::domain, "pump power must be >= 0");
  return std::sqrt(pump_power * cavity.pump_enhancement / opo_threshold(cavity, e_nl));
}

}  // namespace sqz
