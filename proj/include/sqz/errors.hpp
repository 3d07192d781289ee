#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sqz {

// Broad classes of failure. The CLI maps each onto its own exit code.
enum class ErrorKind {
  argument,
  domain,
  range,
  parse,
  validation,
  configuration,
  solver,
  infeasible,
  identifiability,
  alignment,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse failure in a structured text document; line is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, unsigned long line, const std::string& message);
  unsigned long line() const noexcept { return line_; }

 private:
  unsigned long line_;
};

// Carries every violated invariant, not just the first one found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace sqz
