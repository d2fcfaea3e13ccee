#pragma once

#include <stdexcept>
#include <string>

namespace hamscat {

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable identifier used by the command-line front end.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Invalid input: dimension mismatch, bad parameters, inadmissible energy.
class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what, std::string code = "configuration")
      : Error(std::move(code), what) {}
};

class CompletenessError : public ConfigurationError {
 public:
  explicit CompletenessError(const std::string& what)
      : ConfigurationError(what, "completeness_not_certified") {}
};

class EnergyBelowBarrierError : public ConfigurationError {
 public:
  explicit EnergyBelowBarrierError(const std::string& what)
      : ConfigurationError(what, "energy_below_barrier") {}
};

/// Failure of a numerical procedure on an admissible configuration.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::string code = "numerical")
      : Error(std::move(code), what) {}
};

class IntegratorAccuracyError : public NumericalError {
 public:
  explicit IntegratorAccuracyError(const std::string& what)
      : NumericalError(what, "integrator_accuracy") {}
};

class HorizonExceededError : public NumericalError {
 public:
  explicit HorizonExceededError(const std::string& what)
      : NumericalError(what, "horizon_exceeded") {}
};

class ChartOverflowError : public NumericalError {
 public:
  explicit ChartOverflowError(const std::string& what)
      : NumericalError(what, "chart_overflow") {}
};

class TurningPointError : public NumericalError {
 public:
  explicit TurningPointError(const std::string& what)
      : NumericalError(what, "turning_point_not_found") {}
};

}  // namespace hamscat
