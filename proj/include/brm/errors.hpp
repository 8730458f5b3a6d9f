#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace brm {

/// Invalid user-supplied configuration. The message is a single line
/// suitable for machine parsing, e.g. "b exceeds N".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments of a numerical operation was violated
/// (spectral parameter on the real axis, empty index set, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not reach its target accuracy.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved_error)
      : std::runtime_error(what), achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

/// Internal consistency check failed: a returned constant disagrees with its
/// independent numerical estimate.
class SelfCheckError : public NumericalError {
 public:
  SelfCheckError(const std::string& what, double returned, double estimated)
      : NumericalError(what, std::abs(returned - estimated)),
        returned_(returned),
        estimated_(estimated) {}

  double returned() const noexcept { return returned_; }
  double estimated() const noexcept { return estimated_; }

 private:
  double returned_;
  double estimated_;
};

}  // namespace brm
