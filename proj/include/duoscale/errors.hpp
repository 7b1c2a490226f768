// Error types shared by every duoscale module.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace duoscale {

/// Bad sizes, out-of-range parameters, malformed input.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration text could not be parsed or is inconsistent.
class ConfigError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

/// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Evaluation outside the domain of a formula (e.g. amplitude a <= 0 in polar form).
class DomainError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DecompositionFailure : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DegenerateSpectrum : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class EmptyCurve : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IntegrationFailure : public NumericalError {
public:
  IntegrationFailure(const std::string& what, std::size_t step)
      : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

}  // namespace duoscale
