#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sqz/bench.hpp"

namespace sqz::test {

inline std::filesystem::path source_dir() { return SQZSIM_SOURCE_DIR; }

inline std::filesystem::path paper_config_path() { return source_dir() / "configs" / "paper-bench.ini"; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline const BenchConfig& paper_bench() {
  static const BenchConfig b = load_bench_config_file(paper_config_path());
  return b;
}

inline std::string paper_text() { return read_file(paper_config_path()); }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sqzsim-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline double db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace sqz::test
