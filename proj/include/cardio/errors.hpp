#pragma once

#include <stdexcept>
#include <string>

namespace cardio {

/// Base for every error raised by the library. `code()` is a short
/// machine-parsable tag that the command-line tool prints on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("E_VALIDATION", what) {}
};

class EllipticityError : public Error {
 public:
  explicit EllipticityError(const std::string& what) : Error("E_ELLIPTICITY", what) {}
};

class CompatibilityError : public Error {
 public:
  explicit CompatibilityError(const std::string& what) : Error("E_COMPATIBILITY", what) {}
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error("E_SOLVER", what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step) : Error("E_DIVERGENCE", what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("E_CONFIG", what) {}
};

class StagnationError : public Error {
 public:
  explicit StagnationError(const std::string& what) : Error("E_STAGNATION", what) {}
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what) : Error("E_DEGENERATE", what) {}
};

}  // namespace cardio
