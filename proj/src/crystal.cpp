#include "sqz/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "sqz/errors.hpp"
#include "sqz/kernels.hpp"

namespace sqz {

const char* to_string(Material m) {
  switch (m) {
    case Material::ppktp: return "PPKTP";
    case Material::mgo_linbo3: return "MgO_LiNbO3";
  }
  return "unknown";
}

const char* to_string(PhaseMatching p) {
  switch (p) {
    case PhaseMatching::quasi: return "quasi";
    case PhaseMatching::birefringent_type_i: return "birefringent_type_i";
  }
  return "unknown";
}

std::vector<std::string> CrystalSpec::violations(const std::string& prefix) const {
  std::vector<std::string> v;
  if (!(length > 0.0)) v.push_back(fmt::format("{}.length must be > 0 (got {} m)", prefix, length));
  if (poling_period_at_ref && !(*poling_period_at_ref > 0.0))
    v.push_back(fmt::format("{}.poling_period must be > 0 (got {} m)", prefix, *poling_period_at_ref));
  if (!(d_eff > 0.0)) v.push_back(fmt::format("{}.d_eff must be > 0 (got {} pm/V)", prefix, d_eff));
  if (phase_matching == PhaseMatching::birefringent_type_i && !fundamental_dispersion)
    v.push_back(fmt::format("{}: type-I phase matching needs a fundamental (ordinary) dispersion table", prefix));
  auto covers = [&](const DispersionTable& t, const std::string& ref) {
    if (t.wavelength_min_um > 0.532 || t.wavelength_max_um < 1.064)
      v.push_back(fmt::format("{}: dataset '{}' does not cover 532-1064 nm", prefix, ref));
  };
  covers(dispersion, sellmeier_table_ref);
  if (fundamental_dispersion) covers(*fundamental_dispersion, fundamental_table_ref);
  return v;
}

double refractive_index(const CrystalSpec& crystal, double wavelength_m, Celsius temperature) {
  return crystal.dispersion.index(wavelength_m, temperature);
}

double fundamental_index(const CrystalSpec& crystal, double wavelength_m, Celsius temperature) {
  if (crystal.phase_matching == PhaseMatching::birefringent_type_i) {
    if (!crystal.fundamental_dispersion)
      throw Error(ErrorKind::configuration, "type-I crystal has no fundamental dispersion table");
    return crystal.fundamental_dispersion->index(wavelength_m, temperature);
  }
  return crystal.dispersion.index(wavelength_m, temperature);
}

double harmonic_index(const CrystalSpec& crystal, double wavelength_m, Celsius temperature) {
  return crystal.dispersion.index(wavelength_m, temperature);
}

double material_mismatch(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius temperature) {
  const double l1 = fundamental.wavelength();
  const double l2 = l1 / 2.0;
  const double n1 = fundamental_index(crystal, l1, temperature);
  const double n2 = harmonic_index(crystal, l2, temperature);
  return 2.0 * pi * (n2 / l2 - 2.0 * n1 / l1);
}

double grating_period(const CrystalSpec& crystal, Celsius temperature) {
  if (!crystal.poling_period_at_ref)
    throw Error(ErrorKind::configuration,
                fmt::format("{} crystal has no poling period; quasi-phase-matching needs one", to_string(crystal.material)));
  return *crystal.poling_period_at_ref *
         (1.0 + crystal.thermal_expansion_coeff * (temperature - crystal.reference_temperature));
}

double qpm_mismatch(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius temperature) {
  const double period = grating_period(crystal, temperature);
  return material_mismatch(crystal, fundamental, temperature) - 2.0 * pi / period;
}

double phase_mismatch(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius temperature) {
  if (crystal.phase_matching == PhaseMatching::quasi) return qpm_mismatch(crystal, fundamental, temperature);
  return material_mismatch(crystal, fundamental, temperature);
}

double solve_poling_period(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius target) {
  constexpr double lo_um = 1.0;
  constexpr double hi_um = 100.0;
  const double dk_material = material_mismatch(crystal, fundamental, target);
  const double expansion = 1.0 + crystal.thermal_expansion_coeff * (target - crystal.reference_temperature);
  auto residual = [&](double period_um) { return dk_material - 2.0 * pi / (period_um * 1e-6 * expansion); };

  const double f_lo = residual(lo_um);
  const double f_hi = residual(hi_um);
  if (!(f_lo < 0.0 && f_hi > 0.0))
    throw Error(ErrorKind::solver,
                fmt::format("no poling period in [{}, {}] um: residuals {} and {} rad/m", lo_um, hi_um, f_lo, f_hi));

  std::uintmax_t max_iter = 200;
  auto [a, b] = boost::math::tools::toms748_solve(residual, lo_um, hi_um, f_lo, f_hi,
                                                  boost::math::tools::eps_tolerance<double>(), max_iter);
  double period_um = std::abs(residual(a)) < std::abs(residual(b)) ? a : b;
  // residual is smooth and monotone; one Newton step removes the last ulps of bracket slack
  const double slope = 2.0 * pi / (period_um * period_um * 1e-6 * expansion);
  period_um -= residual(period_um) / slope;

  const double period = period_um * 1e-6;
  if (std::abs(residual(period_um)) >= 1e-6)
    throw Error(ErrorKind::solver, fmt::format("poling period solve left residual {} rad/m", residual(period_um)));
  return period;
}

double phase_matching_efficiency(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental,
                                 Celsius temperature) {
  const double arg = 0.5 * phase_mismatch(crystal, fundamental, temperature) * crystal.length;
  if (arg == 0.0) return 1.0;
  const double s = std::sin(arg) / arg;
  return s * s;
}

Celsius phase_matched_temperature(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius lo,
                                  Celsius hi) {
  auto f = [&](double t) { return phase_mismatch(crystal, fundamental, Celsius{t}); };
  // scan for the first sign change so a wide window still finds the matched point
  constexpr int scan = 64;
  double a = lo.value;
  double fa = f(a);
  if (fa == 0.0) return lo;
  for (int i = 1; i <= scan; ++i) {
    const double b = lo.value + (hi.value - lo.value) * i / scan;
    const double fb = f(b);
    if (fb == 0.0) return Celsius{b};
    if ((fa < 0.0) != (fb < 0.0)) {
      std::uintmax_t iters = 200;
      auto [r0, r1] = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                                        boost::math::tools::eps_tolerance<double>(), iters);
      return Celsius{std::abs(f(r0)) < std::abs(f(r1)) ? r0 : r1};
    }
    a = b;
    fa = fb;
  }
  throw Error(ErrorKind::argument,
              fmt::format("temperature range [{}, {}] C does not bracket the phase-matching peak; widen the range",
                          lo.value, hi.value));
}

TuningCurve tuning_curve(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental, Celsius lo, Celsius hi,
                         std::size_t samples) {
  if (samples < 16) throw Error(ErrorKind::argument, fmt::format("tuning curve needs >= 16 samples, got {}", samples));
  if (!(hi.value > lo.value)) throw Error(ErrorKind::argument, "tuning curve range must be increasing");

  TuningCurve curve;
  curve.center_temperature = phase_matched_temperature(crystal, fundamental, lo, hi);

  const double step = (hi.value - lo.value) / static_cast<double>(samples - 1);
  curve.temperatures.reserve(samples + 1);
  for (std::size_t i = 0; i < samples; ++i) curve.temperatures.push_back(lo.value + step * static_cast<double>(i));
  curve.temperatures.back() = hi.value;
  auto pos = std::lower_bound(curve.temperatures.begin(), curve.temperatures.end(), curve.center_temperature.value);
  if (pos == curve.temperatures.end() || *pos != curve.center_temperature.value)
    curve.temperatures.insert(pos, curve.center_temperature.value);

  curve.normalized_efficiency.resize(curve.temperatures.size());
  kernels::tuning_efficiency_parallel(crystal, fundamental, curve.temperatures, curve.normalized_efficiency);

  auto eff = [&](double t) { return phase_matching_efficiency(crystal, fundamental, Celsius{t}); };
  auto half_max = [&](double direction) {
    double inside = curve.center_temperature.value;
    double outside = inside;
    for (;;) {
      outside += direction * step;
      if (outside < lo.value || outside > hi.value)
        throw Error(ErrorKind::argument,
                    fmt::format("half-maximum lies outside [{}, {}] C; widen the tuning range", lo.value, hi.value));
      if (eff(outside) < 0.5) break;
      inside = outside;
    }
    while (std::abs(outside - inside) > 1e-7) {
      const double mid = 0.5 * (inside + outside);
      (eff(mid) >= 0.5 ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  curve.lower_half_max = Celsius{half_max(-1.0)};
  curve.upper_half_max = Celsius{half_max(+1.0)};
  curve.fwhm = curve.upper_half_max.value - curve.lower_half_max.value;
  return curve;
}

}  // namespace sqz
