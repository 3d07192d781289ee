#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sqz::cli {

// Process exit codes.
enum ExitCode : int {
  ok = 0,
  argument_error = 2,
  parse_error = 3,
  validation_error = 4,
  solver_error = 5,
  infeasible_error = 6,
  io_error = 7,
};

inline constexpr const char* tool_version = "1.0.0";

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sqz::cli
