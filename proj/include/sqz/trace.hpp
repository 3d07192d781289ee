#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sqz {

enum class TraceKind {
  shot,
  squeezed_raw,
  squeezed_subtracted,
  antisqueezed_raw,
  antisqueezed_subtracted,
  electronic,
  scanned_zero_span,
};

enum class AxisKind { frequency, time };

const char* to_string(TraceKind kind);
TraceKind trace_kind_from_string(const std::string& name);

// Sampled noise power in shot-noise units over a frequency or time axis.
struct NoiseTrace {
  AxisKind axis_kind = AxisKind::frequency;
  TraceKind kind = TraceKind::squeezed_subtracted;
  std::vector<double> axis;    // Hz or s, strictly increasing
  std::vector<double> values;  // linear
  std::vector<char> valid;     // 0 where electronic subtraction left nothing
  std::vector<double> angle;   // rad; time-series traces only
  bool measured = false;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> warnings;

  std::size_t size() const { return axis.size(); }
  bool is_valid(std::size_t i) const { return valid.empty() || valid[i] != 0; }

  std::vector<std::string> violations() const;
};

// Long-format CSV: comment lines for metadata, then frequency_hz,v_linear,v_db,trace_kind.
void write_trace_csv(std::ostream& out, std::span<const NoiseTrace> traces,
                     const std::vector<std::pair<std::string, std::string>>& metadata = {});

// time_s,angle_rad,variance_linear
void write_timeseries_csv(std::ostream& out, const NoiseTrace& trace,
                          const std::vector<std::pair<std::string, std::string>>& metadata = {});

// Reads the trace schema (or the two-column frequency_hz,value_db fallback). Every row
// becomes one sample of one trace per trace_kind; unsorted axes are sorted with a warning.
std::vector<NoiseTrace> parse_measured_traces(const std::string& text, const std::string& source_name);
std::vector<NoiseTrace> import_measured_traces(const std::filesystem::path& path);

// Single-trace convenience; errors when the file holds more than one kind.
NoiseTrace import_measured_trace(const std::filesystem::path& path);

}  // namespace sqz
