#include "sqz/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "sqz/errors.hpp"

namespace sqz {

namespace pt = boost::property_tree;

namespace {

// Physical dimension of a config value; decides which unit suffixes are accepted.
enum class Quantity {
  length,
  power,
  frequency,
  temperature,
  temperature_difference,
  fraction,
  level,  // shot-noise relative power, linear or dB
  angle,
  time,
  per_kelvin,
  nonlinearity,
  angular_rate,
  real,
  integer,
  text,
  flag,
};

struct Unit {
  const char* suffix;
  double scale;
};

std::vector<Unit> units_for(Quantity q) {
  switch (q) {
    case Quantity::length: return {{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
    case Quantity::power: return {{"w", 1.0}, {"mw", 1e-3}};
    case Quantity::frequency: return {{"hz", 1.0}, {"khz", 1e3}, {"mhz", 1e6}, {"ghz", 1e9}};
    case Quantity::temperature: return {{"c", 1.0}};
    case Quantity::temperature_difference: return {{"k", 1.0}};
    case Quantity::fraction: return {{"", 1.0}, {"percent", 1e-2}};
    case Quantity::level: return {{"", 1.0}, {"db", 0.0}};
    case Quantity::angle: return {{"rad", 1.0}, {"mrad", 1e-3}};
    case Quantity::time: return {{"s", 1.0}, {"ms", 1e-3}};
    case Quantity::per_kelvin: return {{"per_k", 1.0}};
    case Quantity::nonlinearity: return {{"pm_per_v", 1.0}};
    case Quantity::angular_rate: return {{"rad_per_s", 1.0}};
    case Quantity::real:
    case Quantity::integer:
    case Quantity::text:
    case Quantity::flag: return {{"", 1.0}};
  }
  return {};
}

struct Field {
  const char* section;
  const char* name;
  Quantity quantity;
  bool required = false;
  const char* reflectivity_alias = nullptr;  // name of the R = 1 - T spelling
};

const std::vector<std::string>& required_sections() {
  static const std::vector<std::string> s{"pump_chain", "shg_cavity", "shg_crystal", "opo_cavity",
                                          "opo_crystal", "detection"};
  return s;
}

// Sections written into run manifests; ignored on load so a manifest is itself a valid config.
bool is_reserved_section(const std::string& s) { return s == "run" || s == "derived"; }

const std::vector<Field>& schema() {
  using Q = Quantity;
  static const std::vector<Field> fields = [] {
    std::vector<Field> f{
        {"bench", "name", Q::text},
        {"pump_chain", "fundamental_wavelength", Q::length, true},
        {"pump_chain", "harmonic_wavelength", Q::length},
        {"pump_chain", "shg_input_power", Q::power, true},
        {"pump_chain", "shg_output_power", Q::power, true},
        {"pump_chain", "delivery_efficiency", Q::fraction},
        {"subcarrier", "frequency_shift", Q::frequency},
        {"subcarrier", "oc4_local_oscillator", Q::frequency},
        {"detection", "escape_efficiency", Q::fraction},
        {"detection", "propagation_efficiency", Q::fraction},
        {"detection", "homodyne_efficiency", Q::fraction, true},
        {"detection", "quantum_efficiency", Q::fraction, true},
        {"detection", "electronic_low_frequency", Q::frequency},
        {"detection", "electronic_low", Q::level},
        {"detection", "electronic_high_frequency", Q::frequency},
        {"detection", "electronic_high", Q::level},
        {"detection", "scatter_amplitude", Q::level},
        {"detection", "scatter_reference_frequency", Q::frequency},
        {"detection", "scatter_exponent", Q::real},
        {"operating_point", "pump_parameter", Q::real},
        {"operating_point", "decay_rate", Q::angular_rate},
        {"operating_point", "squeeze_angle_mean", Q::angle},
        {"operating_point", "squeeze_angle_rms_jitter", Q::angle},
        {"measurement", "rbw", Q::frequency},
        {"measurement", "vbw", Q::frequency},
        {"measurement", "center_frequency", Q::frequency},
        {"measurement", "span", Q::frequency},
        {"measurement", "sweep_time", Q::time},
        {"measurement", "ramp_rate", Q::frequency},
        {"measurement", "ramp_amplitude", Q::angle},
        {"measurement", "dither_frequency", Q::frequency},
        {"measurement", "dither_depth", Q::angle},
        {"measurement", "dither_line_fundamental", Q::level},
        {"measurement", "dither_line_harmonic", Q::level},
        {"measurement", "servo_gain", Q::real},
        {"measurement", "servo_integrator_corner", Q::frequency},
        {"measurement", "spectrum_start", Q::frequency},
        {"measurement", "spectrum_stop", Q::frequency},
        {"measurement", "spectrum_points", Q::integer},
        {"measurement", "lock_duration", Q::time},
        {"measurement", "lock_oversampling", Q::integer},
        {"measurement", "trace_noise", Q::flag},
        {"tuning", "half_span", Q::temperature_difference},
        {"tuning", "samples", Q::integer},
        {"solver", "shg_relative_tolerance", Q::real},
        {"solver", "shg_max_iterations", Q::integer},
        {"solver", "quadrature_abs_tolerance", Q::real},
        {"fit", "starts", Q::integer},
        {"fit", "simplex_tolerance", Q::real},
        {"fit", "max_evaluations", Q::integer},
    };
    for (const char* cav : {"shg_cavity", "opo_cavity"}) {
      f.push_back({cav, "geometric_length", Q::length, true});
      f.push_back({cav, "input_coupler_t_fundamental", Q::fraction, true, "input_coupler_r_fundamental"});
      f.push_back({cav, "input_coupler_t_harmonic", Q::fraction, true, "input_coupler_r_harmonic"});
      f.push_back({cav, "output_coupler_t_fundamental", Q::fraction, true, "output_coupler_r_fundamental"});
      f.push_back({cav, "output_coupler_t_harmonic", Q::fraction, true, "output_coupler_r_harmonic"});
      f.push_back({cav, "intracavity_loss", Q::fraction});
      f.push_back({cav, "mirror_curvature_1", Q::length, true});
      f.push_back({cav, "mirror_curvature_2", Q::length, true});
      f.push_back({cav, "operating_temperature", Q::temperature, true});
      f.push_back({cav, "mode_matching", Q::fraction});
      f.push_back({cav, "pump_enhancement", Q::real});
      f.push_back({cav, "waist", Q::length});
    }
    for (const char* cr : {"shg_crystal", "opo_crystal"}) {
      f.push_back({cr, "material", Q::text, true});
      f.push_back({cr, "phase_matching", Q::text, true});
      f.push_back({cr, "length", Q::length, true});
      f.push_back({cr, "poling_period", Q::length});
      f.push_back({cr, "reference_temperature", Q::temperature});
      f.push_back({cr, "thermal_expansion", Q::per_kelvin});
      f.push_back({cr, "d_eff", Q::nonlinearity, true});
      f.push_back({cr, "sellmeier_table", Q::text, true});
      f.push_back({cr, "fundamental_table", Q::text});
    }
    return f;
  }();
  return fields;
}

std::string spelled(const char* base, const Unit& u) {
  return *u.suffix ? fmt::format("{}_{}", base, u.suffix) : std::string(base);
}

struct Match {
  const Field* field = nullptr;
  Unit unit{"", 1.0};
  bool reflectivity = false;
};

std::optional<Match> match_key(const std::string& section, const std::string& key) {
  for (const auto& f : schema()) {
    if (section != f.section) continue;
    for (const auto& u : units_for(f.quantity)) {
      if (key == spelled(f.name, u)) return Match{&f, u, false};
      if (f.reflectivity_alias && key == spelled(f.reflectivity_alias, u)) return Match{&f, u, true};
    }
  }
  return std::nullopt;
}

bool known_section(const std::string& s) {
  return std::any_of(schema().begin(), schema().end(), [&](const Field& f) { return s == f.section; });
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Typed view over a document: resolves spellings and units, collecting every problem.
class Reader {
 public:
  explicit Reader(const ConfigDocument& doc) {
    std::map<std::string, std::string> spelling;
    for (const auto& s : required_sections()) {
      const bool present = std::any_of(doc.entries.begin(), doc.entries.end(),
                                       [&](const ConfigEntry& e) { return e.section == s; });
      if (!present) violations.push_back(fmt::format("missing section [{}]", s));
    }
    for (const auto& e : doc.entries) {
      if (is_reserved_section(e.section)) continue;
      if (!known_section(e.section)) {
        violations.push_back(fmt::format("unknown section [{}] (key {})", e.section, e.key));
        continue;
      }
      auto m = match_key(e.section, e.key);
      if (!m) {
        violations.push_back(fmt::format("unknown key {}.{}", e.section, e.key));
        continue;
      }
      const std::string id = fmt::format("{}.{}", e.section, m->field->name);
      if (auto it = spelling.find(id); it != spelling.end()) {
        violations.push_back(fmt::format("{} is given twice ({} and {})", id, it->second, e.key));
        continue;
      }
      spelling[id] = e.key;
      convert(id, e, *m);
    }
    for (const auto& f : schema()) {
      const std::string id = fmt::format("{}.{}", f.section, f.name);
      const bool section_present = std::any_of(doc.entries.begin(), doc.entries.end(),
                                               [&](const ConfigEntry& e) { return e.section == f.section; });
      if (f.required && section_present && !spelling.count(id))
        violations.push_back(fmt::format("missing key {} (units: {})", id, suffix_list(f)));
    }
  }

  std::optional<double> number(const std::string& section, const std::string& name) const {
    auto it = numbers_.find(section + "." + name);
    if (it == numbers_.end()) return std::nullopt;
    return it->second;
  }
  double number_or(const std::string& section, const std::string& name, double fallback) const {
    return number(section, name).value_or(fallback);
  }
  std::optional<std::string> text(const std::string& section, const std::string& name) const {
    auto it = texts_.find(section + "." + name);
    if (it == texts_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> violations;

 private:
  static std::string suffix_list(const Field& f) {
    std::vector<std::string> s;
    for (const auto& u : units_for(f.quantity)) s.push_back(*u.suffix ? fmt::format("_{}", u.suffix) : "none");
    if (f.reflectivity_alias) s.push_back(fmt::format("or {}", f.reflectivity_alias));
    return fmt::format("{}", fmt::join(s, ", "));
  }

  void convert(const std::string& id, const ConfigEntry& e, const Match& m) {
    const std::string where = fmt::format("{}.{}", e.section, e.key);
    const Quantity q = m.field->quantity;
    if (q == Quantity::text) {
      if (e.value.empty()) violations.push_back(fmt::format("{} must not be empty", where));
      texts_[id] = e.value;
      return;
    }
    if (q == Quantity::flag) {
      if (e.value == "true" || e.value == "1" || e.value == "yes") numbers_[id] = 1.0;
      else if (e.value == "false" || e.value == "0" || e.value == "no") numbers_[id] = 0.0;
      else violations.push_back(fmt::format("{} expects true or false, got '{}'", where, e.value));
      return;
    }
    auto v = parse_number(e.value);
    if (!v) {
      violations.push_back(fmt::format("{} expects a number, got '{}'", where, e.value));
      return;
    }
    double x = *v;
    if (q == Quantity::integer && x != std::floor(x)) {
      violations.push_back(fmt::format("{} expects an integer, got '{}'", where, e.value));
      return;
    }
    if (q == Quantity::level && std::string(m.unit.suffix) == "db") x = std::pow(10.0, x / 10.0);
    else x *= m.unit.scale;
    if (m.reflectivity) x = 1.0 - x;
    numbers_[id] = x;
  }

  std::map<std::string, double> numbers_;
  std::map<std::string, std::string> texts_;
};

std::optional<Material> material_from(const std::string& s) {
  if (s == "PPKTP" || s == "ppktp") return Material::ppktp;
  if (s == "MgO_LiNbO3" || s == "mgo_linbo3") return Material::mgo_linbo3;
  return std::nullopt;
}

std::optional<PhaseMatching> phase_matching_from(const std::string& s) {
  if (s == "quasi") return PhaseMatching::quasi;
  if (s == "birefringent_type_i") return PhaseMatching::birefringent_type_i;
  return std::nullopt;
}

CrystalSpec read_crystal(const Reader& r, const std::string& sec, const std::filesystem::path& data_dir,
                         std::vector<std::string>& v) {
  CrystalSpec c;
  if (auto m = r.text(sec, "material")) {
    if (auto mm = material_from(*m)) c.material = *mm;
    else v.push_back(fmt::format("{}.material '{}' is not one of PPKTP, MgO_LiNbO3", sec, *m));
  }
  if (auto p = r.text(sec, "phase_matching")) {
    if (auto pp = phase_matching_from(*p)) c.phase_matching = *pp;
    else v.push_back(fmt::format("{}.phase_matching '{}' is not one of quasi, birefringent_type_i", sec, *p));
  }
  c.length = r.number_or(sec, "length", 0.0);
  c.poling_period_at_ref = r.number(sec, "poling_period");
  c.reference_temperature = Celsius{r.number_or(sec, "reference_temperature", 25.0)};
  c.thermal_expansion_coeff = r.number_or(sec, "thermal_expansion", 0.0);
  c.d_eff = r.number_or(sec, "d_eff", 0.0);
  c.sellmeier_table_ref = r.text(sec, "sellmeier_table").value_or("");
  c.fundamental_table_ref = r.text(sec, "fundamental_table").value_or("");
  auto load = [&](const std::string& id, const char* key) -> std::optional<DispersionTable> {
    if (id.empty()) return std::nullopt;
    try {
      return resolve_dispersion(id, data_dir);
    } catch (const Error& e) {
      v.push_back(fmt::format("{}.{}: {}", sec, key, e.what()));
      return std::nullopt;
    }
  };
  if (auto t = load(c.sellmeier_table_ref, "sellmeier_table")) c.dispersion = *t;
  c.fundamental_dispersion = load(c.fundamental_table_ref, "fundamental_table");
  if (c.phase_matching == PhaseMatching::quasi && c.fundamental_dispersion)
    v.push_back(fmt::format("{}.fundamental_table is only used with birefringent_type_i", sec));
  if (c.phase_matching == PhaseMatching::birefringent_type_i && c.poling_period_at_ref)
    v.push_back(fmt::format("{}.poling_period is meaningless for birefringent_type_i", sec));
  return c;
}

CavitySpec read_cavity(const Reader& r, const std::string& sec, CrystalSpec crystal) {
  CavitySpec c;
  c.crystal = std::move(crystal);
  c.geometric_length_one_way = r.number_or(sec, "geometric_length", 0.0);
  c.input_coupler = {r.number_or(sec, "input_coupler_t_fundamental", 0.0),
                     r.number_or(sec, "input_coupler_t_harmonic", 0.0)};
  c.output_coupler = {r.number_or(sec, "output_coupler_t_fundamental", 0.0),
                      r.number_or(sec, "output_coupler_t_harmonic", 0.0)};
  c.intracavity_loss_round_trip = r.number_or(sec, "intracavity_loss", 0.0);
  c.mirror_curvatures = {r.number_or(sec, "mirror_curvature_1", 0.0), r.number_or(sec, "mirror_curvature_2", 0.0)};
  c.operating_temperature = Celsius{r.number_or(sec, "operating_temperature", 25.0)};
  c.mode_matching = r.number_or(sec, "mode_matching", 1.0);
  c.pump_enhancement = r.number_or(sec, "pump_enhancement", 1.0);
  c.waist = r.number(sec, "waist");
  return c;
}

// Fills a missing quasi-phase-matching period by solving at the cavity set point.
void complete_poling_period(CavitySpec& cav, const OpticalFieldSpec& fundamental, const std::string& sec,
                            std::vector<std::string>& v) {
  auto& cr = cav.crystal;
  if (cr.phase_matching != PhaseMatching::quasi || cr.poling_period_at_ref) return;
  try {
    cr.poling_period_at_ref = solve_poling_period(cr, fundamental, cav.operating_temperature);
  } catch (const Error& e) {
    v.push_back(fmt::format("{}: cannot derive poling period: {}", sec, e.what()));
  }
}

}  // namespace

const ConfigEntry* ConfigDocument::find(const std::string& section, const std::string& key) const {
  for (const auto& e : entries)
    if (e.section == section && e.key == key) return &e;
  return nullptr;
}

void ConfigDocument::set(const std::string& section, const std::string& key, const std::string& value) {
  for (auto& e : entries) {
    if (e.section == section && e.key == key) {
      e.value = value;
      return;
    }
  }
  // Keep sections contiguous so the written document reads back into the same order.
  auto last = std::find_if(entries.rbegin(), entries.rend(), [&](const ConfigEntry& e) { return e.section == section; });
  if (last == entries.rend()) entries.push_back({section, key, value});
  else entries.insert(last.base(), {section, key, value});
}

ConfigDocument parse_config_document(const std::string& text, const std::string& source_name) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source_name, e.line(), e.message());
  }
  ConfigDocument doc;
  doc.source = source_name;
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw ParseError(source_name, 0, fmt::format("key '{}' appears outside any section", section));
    for (const auto& [key, value] : body) doc.entries.push_back({section, key, trim(value.data())});
  }
  return doc;
}

void apply_override(ConfigDocument& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw Error(ErrorKind::argument, fmt::format("override '{}' is not of the form section.key=value", assignment));
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const std::string value = trim(assignment.substr(eq + 1));
  auto m = match_key(section, key);
  if (!m) throw Error(ErrorKind::argument, fmt::format("override names unknown key {}.{}", section, key));
  // Drop any other spelling of the same field so the override wins.
  std::erase_if(doc.entries, [&](const ConfigEntry& e) {
    if (e.section != section || e.key == key) return false;
    auto other = match_key(e.section, e.key);
    return other && other->field == m->field;
  });
  doc.set(section, key, value);
}

BenchConfig build_bench_config(const ConfigDocument& doc, const std::filesystem::path& data_dir) {
  Reader r(doc);
  std::vector<std::string> v = r.violations;

  BenchConfig b;
  b.document = doc;
  b.data_dir = data_dir;
  b.name = r.text("bench", "name").value_or("unnamed");

  const double lambda = r.number_or("pump_chain", "fundamental_wavelength", 1064e-9);
  if (!(lambda > 0.0)) {
    v.push_back("pump_chain.fundamental_wavelength must be > 0");
    throw ValidationError(v);
  }
  const double p_in = r.number_or("pump_chain", "shg_input_power", 0.0);
  const double p_out = r.number_or("pump_chain", "shg_output_power", 0.0);
  if (!(p_in >= 0.0)) v.push_back(fmt::format("pump_chain.shg_input_power must be >= 0 (got {} W)", p_in));
  if (!(p_out >= 0.0)) v.push_back(fmt::format("pump_chain.shg_output_power must be >= 0 (got {} W)", p_out));
  if (!(p_out <= p_in)) v.push_back("pump_chain: SHG output power exceeds its input power");
  b.pump_chain.fundamental = OpticalFieldSpec(lambda, std::max(p_in, 0.0));
  b.pump_chain.harmonic = b.pump_chain.fundamental.harmonic(std::max(p_out, 0.0));
  if (auto h = r.number("pump_chain", "harmonic_wavelength")) {
    if (std::abs(*h - lambda / 2.0) > 1e-12 * lambda)
      v.push_back(fmt::format("pump_chain.harmonic_wavelength ({} m) must be exactly half the fundamental ({} m)", *h,
                              lambda));
  }
  b.pump_chain.delivery_efficiency = r.number("pump_chain", "delivery_efficiency");
  if (auto d = b.pump_chain.delivery_efficiency; d && !(*d >= 0.0 && *d <= 1.0))
    v.push_back(fmt::format("pump_chain.delivery_efficiency must be in [0, 1] (got {})", *d));

  b.subcarrier.frequency_shift = r.number("subcarrier", "frequency_shift");
  b.subcarrier.oc4_local_oscillator = r.number("subcarrier", "oc4_local_oscillator");

  b.shg_cavity = read_cavity(r, "shg_cavity", read_crystal(r, "shg_crystal", data_dir, v));
  b.opo_cavity = read_cavity(r, "opo_cavity", read_crystal(r, "opo_crystal", data_dir, v));

  auto& d = b.detection;
  d.propagation_efficiency = r.number_or("detection", "propagation_efficiency", 0.98);
  d.homodyne_efficiency = r.number_or("detection", "homodyne_efficiency", 1.0);
  d.quantum_efficiency = r.number_or("detection", "quantum_efficiency", 1.0);
  d.electronic.low_frequency = r.number_or("detection", "electronic_low_frequency", 1e3);
  d.electronic.low_level = r.number_or("detection", "electronic_low", 0.0);
  d.electronic.high_frequency = r.number_or("detection", "electronic_high_frequency", 900e3);
  d.electronic.high_level = r.number_or("detection", "electronic_high", 0.0);
  d.scatter.amplitude = r.number_or("detection", "scatter_amplitude", 0.0);
  d.scatter.reference_frequency = r.number_or("detection", "scatter_reference_frequency", 1e4);
  d.scatter.exponent = r.number_or("detection", "scatter_exponent", 3.0);

  auto& op = b.operating_point;
  op.pump_parameter = r.number_or("operating_point", "pump_parameter", 0.0);
  op.squeeze_angle_mean = r.number_or("operating_point", "squeeze_angle_mean", 0.0);
  op.squeeze_angle_rms_jitter = r.number_or("operating_point", "squeeze_angle_rms_jitter", 0.0);

  auto& m = b.measurement;
  m.rbw = r.number_or("measurement", "rbw", m.rbw);
  m.vbw = r.number_or("measurement", "vbw", m.vbw);
  m.center_frequency = r.number_or("measurement", "center_frequency", m.center_frequency);
  m.span = r.number_or("measurement", "span", m.span);
  m.sweep_time = r.number_or("measurement", "sweep_time", m.sweep_time);
  m.ramp.rate = r.number_or("measurement", "ramp_rate", m.ramp.rate);
  m.ramp.amplitude = r.number_or("measurement", "ramp_amplitude", m.ramp.amplitude);
  m.dither.frequency = r.number_or("measurement", "dither_frequency", m.dither.frequency);
  m.dither.depth = r.number_or("measurement", "dither_depth", m.dither.depth);
  m.dither.line_fundamental = r.number_or("measurement", "dither_line_fundamental", m.dither.line_fundamental);
  m.dither.line_harmonic = r.number_or("measurement", "dither_line_harmonic", m.dither.line_harmonic);
  m.servo.gain = r.number_or("measurement", "servo_gain", m.servo.gain);
  m.servo.integrator_corner = r.number_or("measurement", "servo_integrator_corner", m.servo.integrator_corner);
  m.spectrum_start = r.number_or("measurement", "spectrum_start", m.spectrum_start);
  m.spectrum_stop = r.number_or("measurement", "spectrum_stop", m.spectrum_stop);
  m.spectrum_points = static_cast<std::size_t>(
      std::max(0.0, r.number_or("measurement", "spectrum_points", static_cast<double>(m.spectrum_points))));
  m.lock_duration = r.number_or("measurement", "lock_duration", m.lock_duration);
  m.lock_oversampling = static_cast<int>(r.number_or("measurement", "lock_oversampling", m.lock_oversampling));
  m.trace_noise = r.number_or("measurement", "trace_noise", 0.0) != 0.0;

  b.tuning.half_span = r.number_or("tuning", "half_span", b.tuning.half_span);
  b.tuning.samples = static_cast<std::size_t>(
      std::max(0.0, r.number_or("tuning", "samples", static_cast<double>(b.tuning.samples))));
  if (!(b.tuning.half_span > 0.0)) v.push_back("tuning.half_span must be > 0");
  if (b.tuning.samples < 16) v.push_back(fmt::format("tuning.samples must be >= 16 (got {})", b.tuning.samples));

  b.solver.shg_relative_tolerance = r.number_or("solver", "shg_relative_tolerance", b.solver.shg_relative_tolerance);
  b.solver.shg_max_iterations = static_cast<int>(r.number_or("solver", "shg_max_iterations", b.solver.shg_max_iterations));
  b.solver.quadrature_abs_tolerance =
      r.number_or("solver", "quadrature_abs_tolerance", b.solver.quadrature_abs_tolerance);
  if (!(b.solver.shg_relative_tolerance > 0.0)) v.push_back("solver.shg_relative_tolerance must be > 0");
  if (b.solver.shg_max_iterations < 1) v.push_back("solver.shg_max_iterations must be >= 1");
  if (!(b.solver.quadrature_abs_tolerance > 0.0)) v.push_back("solver.quadrature_abs_tolerance must be > 0");

  b.fit.starts = static_cast<int>(r.number_or("fit", "starts", b.fit.starts));
  b.fit.simplex_tolerance = r.number_or("fit", "simplex_tolerance", b.fit.simplex_tolerance);
  b.fit.max_evaluations = static_cast<int>(r.number_or("fit", "max_evaluations", b.fit.max_evaluations));
  if (b.fit.starts < 1) v.push_back("fit.starts must be >= 1");
  if (!(b.fit.simplex_tolerance > 0.0)) v.push_back("fit.simplex_tolerance must be > 0");
  if (b.fit.max_evaluations < 10) v.push_back("fit.max_evaluations must be >= 10");

  // Structural checks first; derived quantities need a sane cavity. Derived values get a
  // placeholder here so that only the explicitly given ones are judged.
  const auto explicit_escape = r.number("detection", "escape_efficiency");
  const auto explicit_decay = r.number("operating_point", "decay_rate");
  for (auto& s : b.shg_cavity.violations("shg_cavity")) v.push_back(std::move(s));
  for (auto& s : b.opo_cavity.violations("opo_cavity")) v.push_back(std::move(s));
  for (auto& s : m.violations("measurement")) v.push_back(std::move(s));
  {
    DetectionChain dc = d;
    dc.escape_efficiency = explicit_escape.value_or(1.0);
    SqueezerOperatingPoint oc = op;
    oc.decay_rate = explicit_decay.value_or(1.0);
    for (auto& s : dc.violations("detection")) v.push_back(std::move(s));
    for (auto& s : oc.violations("operating_point")) v.push_back(std::move(s));
  }
  if (!v.empty()) throw ValidationError(v);

  complete_poling_period(b.shg_cavity, b.pump_chain.fundamental, "shg_crystal", v);
  complete_poling_period(b.opo_cavity, b.pump_chain.fundamental, "opo_crystal", v);
  if (!v.empty()) throw ValidationError(v);

  try {
    const auto opo = derive_cavity(b.opo_cavity, lambda, b.opo_cavity.operating_temperature);
    if (explicit_escape) {
      d.escape_efficiency = *explicit_escape;
    } else {
      d.escape_efficiency = opo.escape_efficiency;
      b.escape_efficiency_derived = true;
    }
    if (explicit_decay) {
      op.decay_rate = *explicit_decay;
    } else {
      op.decay_rate = opo.decay_rate_hwhm;
      b.decay_rate_derived = true;
    }
  } catch (const Error& e) {
    v.push_back(fmt::format("opo_cavity: {}", e.what()));
  }
  for (auto& s : d.violations("detection")) v.push_back(std::move(s));
  for (auto& s : op.violations("operating_point")) v.push_back(std::move(s));
  if (!v.empty()) throw ValidationError(v);
  return b;
}

BenchConfig load_bench_config(const std::string& text, const std::string& source_name,
                              const std::vector<std::string>& overrides, const std::filesystem::path& data_dir) {
  ConfigDocument doc = parse_config_document(text, source_name);
  for (const auto& o : overrides) apply_override(doc, o);
  return build_bench_config(doc, data_dir);
}

BenchConfig load_bench_config_file(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                                   const std::filesystem::path& data_dir) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, fmt::format("cannot open config {}", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return load_bench_config(ss.str(), path.string(), overrides, data_dir);
}

void write_config_document(std::ostream& out, const ConfigDocument& doc) {
  std::string current;
  bool first = true;
  for (const auto& e : doc.entries) {
    if (first || e.section != current) {
      if (!first) out << '\n';
      out << '[' << e.section << "]\n";
      current = e.section;
      first = false;
    }
    out << e.key << " = " << e.value << '\n';
  }
}

std::vector<std::string> schema_keys() {
  std::vector<std::string> keys;
  for (const auto& f : schema()) {
    for (const auto& u : units_for(f.quantity)) {
      keys.push_back(fmt::format("{}.{}", f.section, spelled(f.name, u)));
      if (f.reflectivity_alias) keys.push_back(fmt::format("{}.{}", f.section, spelled(f.reflectivity_alias, u)));
    }
  }
  return keys;
}

}  // namespace sqz
