#pragma once

#include <stdexcept>
#include <string>

namespace cbi {

/// Invalid argument or violated precondition.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: quadrature non-convergence, ODE step underflow, ...
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
  NumericError(const std::string& what, double last_valid_time)
      : std::runtime_error(what), last_valid_time_(last_valid_time) {}

  /// For ODE blowups: the last time up to which the solution is valid.
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_ = -1.0;
};

}  // namespace cbi
