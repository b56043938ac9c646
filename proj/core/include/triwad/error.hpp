#pragma once

#include <stdexcept>
#include <string>

namespace triwad {

// Base error for everything thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files or payloads.
class ParseError : public Error {
public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Invalid user-supplied configuration. CLI maps this to exit code 2.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Wire/session violations, including visibility-audit failures.
// CLI maps this to exit code 3.
class ProtocolError : public Error {
public:
  explicit ProtocolError(const std::string& msg) : Error(msg) {}
};

// Internal solver failure (iteration cap, infeasibility diagnostics).
class SolverError : public Error {
public:
  explicit SolverError(const std::string& msg) : Error(msg) {}
};

}  // namespace triwad
