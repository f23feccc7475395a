#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sawspin {

/// Precondition violated by caller-supplied data.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// ODE integration could not reach the requested tolerance.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Steady-state solve found a null space of dimension > 1.
class DegenerateSteadyState : public std::runtime_error {
 public:
  explicit DegenerateSteadyState(int dimension)
      : std::runtime_error("steady state is not unique: null space dimension " +
                           std::to_string(dimension)),
        null_dimension(dimension) {}
  int null_dimension;
};

/// Fock cutoff too small for the requested dynamics.
class CutoffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares fit failed to converge.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration key or value. `key` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_name, const std::string& what)
      : std::runtime_error(what), key(std::move(key_name)) {}
  std::string key;
};

/// Output could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sawspin
