#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sqz/cavity.hpp"
#include "sqz/measurement.hpp"
#include "sqz/quantum_noise.hpp"
#include "sqz/units.hpp"

namespace sqz {

// 1064 nm drive of the SHG and the 532 nm it delivers.
struct PumpChain {
  OpticalFieldSpec fundamental{1064e-9, 0.0};
  OpticalFieldSpec harmonic{532e-9, 0.0};
  std::optional<double> delivery_efficiency;  // share of the SHG output reaching the OPO
  bool operator==(const PumpChain&) const = default;
};

// Reference values kept for the record; no computation reads them.
struct Subcarrier {
  std::optional<double> frequency_shift;
  std::optional<double> oc4_local_oscillator;
  bool operator==(const Subcarrier&) const = default;
};

struct TuningSettings {
  double half_span = 15.0;  // K either side of the reference temperature
  std::size_t samples = 401;
  bool operator==(const TuningSettings&) const = default;
};

struct FitSettings {
  int starts = 8;
  double simplex_tolerance = 1e-6;
  int max_evaluations = 20000;
  bool operator==(const FitSettings&) const = default;
};

// Ordered INI-style document: what was read plus any overrides, before typing.
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  bool operator==(const ConfigEntry&) const = default;
};

struct ConfigDocument {
  std::string source;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
  bool operator==(const ConfigDocument&) const = default;
};

struct BenchConfig {
  std::string name;
  std::filesystem::path data_dir;
  PumpChain pump_chain;
  CavitySpec shg_cavity;
  CavitySpec opo_cavity;
  Subcarrier subcarrier;
  DetectionChain detection;
  bool escape_efficiency_derived = false;
  SqueezerOperatingPoint operating_point;
  bool decay_rate_derived = false;
  MeasurementSettings measurement;
  TuningSettings tuning;
  SolverSettings solver;
  FitSettings fit;
  ConfigDocument document;

  NoiseModel noise_model() const { return make_noise_model(operating_point, detection); }
  bool operator==(const BenchConfig&) const = default;
};

ConfigDocument parse_config_document(const std::string& text, const std::string& source_name);

// "section.key=value"; the key must exist in the schema.
void apply_override(ConfigDocument& doc, const std::string& assignment);

BenchConfig build_bench_config(const ConfigDocument& doc, const std::filesystem::path& data_dir = default_data_dir());

BenchConfig load_bench_config(const std::string& text, const std::string& source_name,
                              const std::vector<std::string>& overrides = {},
                              const std::filesystem::path& data_dir = default_data_dir());

BenchConfig load_bench_config_file(const std::filesystem::path& path, const std::vector<std::string>& overrides = {},
                                   const std::filesystem::path& data_dir = default_data_dir());

void write_config_document(std::ostream& out, const ConfigDocument& doc);

// Lists every accepted "section.key" spelling, for documentation and --set checks.
std::vector<std::string> schema_keys();

}  // namespace sqz
