#include "sqz/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "sqz/errors.hpp"

namespace sqz {

namespace {

constexpr std::pair<TraceKind, const char*> kind_names[] = {
    {TraceKind::shot, "shot"},
    {TraceKind::squeezed_raw, "squeezed_raw"},
    {TraceKind::squeezed_subtracted, "squeezed_subtracted"},
    {TraceKind::antisqueezed_raw, "antisqueezed_raw"},
    {TraceKind::antisqueezed_subtracted, "antisqueezed_subtracted"},
    {TraceKind::electronic, "electronic"},
    {TraceKind::scanned_zero_span, "scanned_zero_span"},
};

bool is_subtracted(TraceKind k) {
  return k == TraceKind::squeezed_subtracted || k == TraceKind::antisqueezed_subtracted;
}

void write_metadata(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& metadata) {
  for (const auto& [k, v] : metadata) fmt::print(out, "# {} = {}\n", k, v);
}

std::string db_field(double v, bool valid) {
  if (!valid || !(v > 0.0)) return "nan";
  return fmt::format("{}", 10.0 * std::log10(v));
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = boost::trim_copy(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end != t.c_str() && *end == '\0';
}

}  // namespace

const char* to_string(TraceKind kind) {
  for (const auto& [k, name] : kind_names)
    if (k == kind) return name;
  return "unknown";
}

TraceKind trace_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kind_names)
    if (name == n) return k;
  throw Error(ErrorKind::argument, fmt::format("unknown trace kind '{}'", name));
}

std::vector<std::string> NoiseTrace::violations() const {
  std::vector<std::string> v;
  if (values.size() != axis.size()) v.push_back("trace values and axis differ in length");
  if (!valid.empty() && valid.size() != axis.size()) v.push_back("trace validity mask has the wrong length");
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1])) {
      v.push_back(fmt::format("trace axis not strictly increasing at sample {}", i));
      break;
    }
  if (!is_subtracted(kind))
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!(values[i] > 0.0)) {
        v.push_back(fmt::format("non-positive value {} at sample {} of a {} trace", values[i], i, to_string(kind)));
        break;
      }
  return v;
}

void write_trace_csv(std::ostream& out, std::span<const NoiseTrace> traces,
                     const std::vector<std::pair<std::string, std::string>>& metadata) {
  write_metadata(out, metadata);
  // Traces of one run share most of their metadata; print each distinct line once.
  std::vector<std::pair<std::string, std::string>> seen;
  for (const auto& t : traces) {
    for (const auto& kv : t.metadata) {
      if (std::find(seen.begin(), seen.end(), kv) != seen.end()) continue;
      seen.push_back(kv);
      fmt::print(out, "# {} = {}\n", kv.first, kv.second);
    }
    for (const auto& w : t.warnings) fmt::print(out, "# warning = {}: {}\n", to_string(t.kind), w);
  }
  out << "frequency_hz,v_linear,v_db,trace_kind\n";
  for (const auto& t : traces)
    for (std::size_t i = 0; i < t.size(); ++i)
      fmt::print(out, "{},{},{},{}\n", t.axis[i], t.values[i], db_field(t.values[i], t.is_valid(i)),
                 to_string(t.kind));
}

void write_timeseries_csv(std::ostream& out, const NoiseTrace& trace,
                          const std::vector<std::pair<std::string, std::string>>& metadata) {
  write_metadata(out, metadata);
  write_metadata(out, trace.metadata);
  for (const auto& w : trace.warnings) fmt::print(out, "# warning = {}\n", w);
  out << "time_s,angle_rad,variance_linear\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    fmt::print(out, "{},{},{}\n", trace.axis[i], trace.angle.empty() ? 0.0 : trace.angle[i], trace.values[i]);
}

std::vector<NoiseTrace> parse_measured_traces(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  unsigned long line_no = 0;
  enum class Layout { unknown, schema, two_column } layout = Layout::unknown;

  struct Row {
    double f;
    double v;
    bool valid;
  };
  std::map<TraceKind, std::vector<Row>> rows;
  std::vector<TraceKind> order;

  while (std::getline(in, line)) {
    ++line_no;
    boost::trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    boost::split(cols, line, boost::is_any_of(","));
    for (auto& c : cols) boost::trim(c);

    if (layout == Layout::unknown) {
      if (cols == std::vector<std::string>{"frequency_hz", "v_linear", "v_db", "trace_kind"}) {
        layout = Layout::schema;
        continue;
      }
      if (cols == std::vector<std::string>{"frequency_hz", "value_db"}) {
        layout = Layout::two_column;
        continue;
      }
      double probe = 0.0;
      if (cols.size() == 2 && parse_double(cols[0], probe)) {
        layout = Layout::two_column;
      } else {
        throw ParseError(source_name, line_no,
                         "header must be 'frequency_hz,v_linear,v_db,trace_kind' or 'frequency_hz,value_db'");
      }
    }

    const std::size_t expected = layout == Layout::schema ? 4 : 2;
    if (cols.size() != expected)
      throw ParseError(source_name, line_no, fmt::format("expected {} columns, found {}", expected, cols.size()));
    double f = 0.0;
    if (!parse_double(cols[0], f) || !(f > 0.0) || !std::isfinite(f))
      throw ParseError(source_name, line_no, fmt::format("bad frequency '{}'", cols[0]));

    Row row{f, 0.0, true};
    TraceKind kind = TraceKind::squeezed_subtracted;
    if (layout == Layout::two_column) {
      double db = 0.0;
      if (!parse_double(cols[1], db) || !std::isfinite(db))
        throw ParseError(source_name, line_no, fmt::format("bad dB value '{}'", cols[1]));
      row.v = std::pow(10.0, db / 10.0);
    } else {
      double lin = 0.0;
      if (!parse_double(cols[1], lin) || !std::isfinite(lin))
        throw ParseError(source_name, line_no, fmt::format("bad linear value '{}'", cols[1]));
      row.v = lin;
      row.valid = lin > 0.0;
      try {
        kind = trace_kind_from_string(cols[3]);
      } catch (const Error& e) {
        throw ParseError(source_name, line_no, e.what());
      }
    }
    if (!rows.count(kind)) order.push_back(kind);
    rows[kind].push_back(row);
  }
  if (order.empty()) throw ParseError(source_name, 0, "no data rows");

  std::vector<NoiseTrace> traces;
  for (TraceKind kind : order) {
    auto& r = rows[kind];
    NoiseTrace t;
    t.kind = kind;
    t.measured = true;
    t.metadata.emplace_back("source", source_name);
    if (!std::is_sorted(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.f < b.f; })) {
      std::stable_sort(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.f < b.f; });
      t.warnings.push_back(fmt::format("{} rows were not in increasing frequency order and were sorted", to_string(kind)));
    }
    for (std::size_t i = 1; i < r.size(); ++i)
      if (r[i].f == r[i - 1].f)
        throw ParseError(source_name, 0, fmt::format("duplicate frequency {} Hz in {} trace", r[i].f, to_string(kind)));
    bool any_invalid = false;
    for (const auto& row : r) {
      t.axis.push_back(row.f);
      t.values.push_back(row.v);
      t.valid.push_back(row.valid ? 1 : 0);
      any_invalid |= !row.valid;
    }
    if (!any_invalid) t.valid.clear();
    traces.push_back(std::move(t));
  }
  return traces;
}

std::vector<NoiseTrace> import_measured_traces(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::io, fmt::format("cannot open trace file {}", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_measured_traces(ss.str(), path.string());
}

NoiseTrace import_measured_trace(const std::filesystem::path& path) {
  auto traces = import_measured_traces(path);
  if (traces.size() != 1)
    throw Error(ErrorKind::argument, fmt::format("{} holds {} traces; expected one", path.string(), traces.size()));
  return std::move(traces.front());
}

}  // namespace sqz
