#pragma once

#include <stdexcept>
#include <string>

namespace nms {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid physical parameters or malformed request.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Configuration file problem. `line()` is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

/// The drive exceeds a stability limit (static bistability or a growing mode).
class InstabilityError : public Error {
public:
  using Error::Error;
};

class SingularMatrixError : public Error {
public:
  using Error::Error;
};

/// Iterative solver hit its iteration cap.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Time-domain oracle refused a configuration or its trajectory blew up.
class GuardError : public Error {
public:
  using Error::Error;
};

}  // namespace nms
