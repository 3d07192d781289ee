#include "sqz/units.hpp"

#include <cmath>

#include <fmt/format.h>

#include "sqz/errors.hpp"

namespace sqz {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::domain: return "domain";
    case ErrorKind::range: return "range";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::solver: return "solver";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::identifiability: return "identifiability";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

ParseError::ParseError(const std::string& source, unsigned long line, const std::string& message)
    : Error(ErrorKind::parse,
            line > 0 ? fmt::format("{}:{}: {}", source, line, message) : fmt::format("{}: {}", source, message)),
      line_(line) {}

namespace {
std::string join_violations(const std::vector<std::string>& v) {
  std::string out = fmt::format("{} invariant violation(s):", v.size());
  for (const auto& s : v) out += " [" + s + "]";
  return out;
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(ErrorKind::validation, join_violations(violations)), violations_(std::move(violations)) {}

OpticalFieldSpec::OpticalFieldSpec(double wavelength_vacuum_m, double power_w)
    : wavelength_(wavelength_vacuum_m), carrier_frequency_(0.0), power_(power_w) {
  if (!(wavelength_vacuum_m > 0.0) || !std::isfinite(wavelength_vacuum_m))
    throw Error(ErrorKind::domain, fmt::format("wavelength must be positive, got {} m", wavelength_vacuum_m));
  if (!(power_w >= 0.0) || !std::isfinite(power_w))
    throw Error(ErrorKind::domain, fmt::format("optical power must be >= 0, got {} W", power_w));
  carrier_frequency_ = 2.0 * pi * speed_of_light / wavelength_vacuum_m;
}

OpticalFieldSpec OpticalFieldSpec::harmonic(double power_w) const { return {wavelength_ / 2.0, power_w}; }

RelativeNoisePower::RelativeNoisePower(double linear_value) : value_(linear_value) {
  if (!(linear_value > 0.0) || !std::isfinite(linear_value))
    throw Error(ErrorKind::domain, fmt::format("relative noise power must be positive, got {}", linear_value));
}

double RelativeNoisePower::decibels() const { return 10.0 * std::log10(value_); }

double to_decibels(RelativeNoisePower v) { return v.decibels(); }

double to_decibels(double linear_value) {
  if (!(linear_value > 0.0))
    throw Error(ErrorKind::domain, fmt::format("cannot express {} in decibels (must be positive)", linear_value));
  return 10.0 * std::log10(linear_value);
}

RelativeNoisePower from_decibels(double db) { return RelativeNoisePower(std::pow(10.0, db / 10.0)); }

}  // namespace sqz
