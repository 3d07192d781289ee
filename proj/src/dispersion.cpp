#include "sqz/dispersion.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "sqz/errors.hpp"

#ifndef SQZSIM_DEFAULT_DATA_DIR
#define SQZSIM_DEFAULT_DATA_DIR "data"
#endif

namespace sqz {

namespace pt = boost::property_tree;

double DispersionTable::index(double wavelength_m, Celsius temperature) const {
  const double l = wavelength_m * 1e6;
  const double t = temperature.value;
  if (!(l >= wavelength_min_um && l <= wavelength_max_um))
    throw Error(ErrorKind::range, fmt::format("dataset '{}': wavelength {} um outside validity range [{}, {}] um", id,
                                              l, wavelength_min_um, wavelength_max_um));
  if (!(t >= temperature_min_c && t <= temperature_max_c))
    throw Error(ErrorKind::range, fmt::format("dataset '{}': temperature {} C outside validity range [{}, {}] C", id,
                                              t, temperature_min_c, temperature_max_c));
  const double l2 = l * l;
  double n = 0.0;
  switch (form) {
    case DispersionForm::pole_sellmeier: {
      double n2 = a - d * l2;
      for (std::size_t i = 0; i < pole_strength.size(); ++i) n2 += pole_strength[i] / (l2 - pole_position[i]);
      double slope = 0.0;
      double inv = 1.0;
      for (double g : dndt) {
        slope += g * inv;
        inv /= l;
      }
      n = std::sqrt(n2) + (t - t_ref_c) * slope;
      break;
    }
    case DispersionForm::thermal_sellmeier: {
      const double f = (t - t0_c) * (t + t1_c);
      const double pole = a3 + b2 * f;
      const double n2 = a1 + (a2 + b1 * f) / (l2 - pole * pole) + b3 * f - a4 * l2;
      n = std::sqrt(n2);
      break;
    }
  }
  return n + index_offset;
}

namespace {

std::vector<double> parse_numbers(const std::string& s, const std::string& key, const std::string& src) {
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw ParseError(src, 0, fmt::format("key '{}': '{}' is not a number", key, tok));
    out.push_back(v);
  }
  return out;
}

}  // namespace

DispersionTable parse_dispersion_table(const std::string& text, const std::string& source_name) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source_name, e.line(), e.message());
  }

  std::set<std::string> seen;
  auto get = [&](const std::string& key, bool required) -> std::string {
    seen.insert(key);
    auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v && required) throw ParseError(source_name, 0, fmt::format("missing required key '{}'", key));
    return v ? *v : std::string{};
  };
  auto number = [&](const std::string& key, bool required, double fallback = 0.0) {
    const std::string s = get(key, required);
    if (s.empty()) return fallback;
    auto v = parse_numbers(s, key, source_name);
    if (v.size() != 1) throw ParseError(source_name, 0, fmt::format("key '{}' expects one number", key));
    return v.front();
  };
  auto pair = [&](const std::string& key) {
    auto v = parse_numbers(get(key, true), key, source_name);
    if (v.size() != 2) throw ParseError(source_name, 0, fmt::format("key '{}' expects two numbers", key));
    return std::pair{v[0], v[1]};
  };

  DispersionTable t;
  t.id = get("id", true);
  t.source = get("source", true);
  std::tie(t.wavelength_min_um, t.wavelength_max_um) = pair("wavelength_range_um");
  std::tie(t.temperature_min_c, t.temperature_max_c) = pair("temperature_range_c");
  t.index_offset = number("index_offset", false);

  const std::string form = get("form", true);
  if (form == "pole_sellmeier") {
    t.form = DispersionForm::pole_sellmeier;
    t.a = number("A", true);
    t.d = number("D", false);
    t.t_ref_c = number("t_ref_c", true);
    t.dndt = parse_numbers(get("dndt", true), "dndt", source_name);
    for (int i = 1;; ++i) {
      const std::string key = fmt::format("pole_{}", i);
      if (!tree.get_optional<std::string>(key)) break;
      auto [b, c] = pair(key);
      t.pole_strength.push_back(b);
      t.pole_position.push_back(c);
    }
    if (t.pole_strength.empty()) throw ParseError(source_name, 0, "pole_sellmeier needs at least pole_1");
  } else if (form == "thermal_sellmeier") {
    t.form = DispersionForm::thermal_sellmeier;
    t.a1 = number("A1", true);
    t.a2 = number("A2", true);
    t.a3 = number("A3", true);
    t.a4 = number("A4", true);
    t.b1 = number("B1", true);
    t.b2 = number("B2", true);
    t.b3 = number("B3", true);
    t.t0_c = number("T0", true);
    t.t1_c = number("T1", true);
  } else {
    throw ParseError(source_name, 0, fmt::format("unknown dispersion form '{}'", form));
  }

  for (const auto& kv : tree) {
    if (!kv.second.empty()) throw ParseError(source_name, 0, fmt::format("sections are not allowed ('{}')", kv.first));
    if (!seen.count(kv.first)) throw ParseError(source_name, 0, fmt::format("unknown key '{}'", kv.first));
  }
  if (!(t.wavelength_min_um < t.wavelength_max_um) || !(t.temperature_min_c < t.temperature_max_c))
    throw ParseError(source_name, 0, "validity ranges must be increasing");
  return t;
}

DispersionTable load_dispersion_table(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::io, fmt::format("cannot open dispersion table {}", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_dispersion_table(ss.str(), path.string());
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("SQZSIM_DATA_DIR"); env && *env) return env;
  return SQZSIM_DEFAULT_DATA_DIR;
}

DispersionTable resolve_dispersion(const std::string& id, const std::filesystem::path& data_dir) {
  const auto path = data_dir / "dispersion" / (id + ".txt");
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::configuration,
                fmt::format("dispersion dataset '{}' not found (looked for {})", id, path.string()));
  auto table = load_dispersion_table(path);
  if (table.id != id)
    throw Error(ErrorKind::configuration, fmt::format("dataset file {} declares id '{}'", path.string(), table.id));
  return table;
}

}  // namespace sqz
