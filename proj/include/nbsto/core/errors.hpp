#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nbsto {

/// Base of every error thrown by the library. The CLI maps the subclasses
/// onto its exit codes.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition or type invariant.
class parameter_error : public error {
 public:
  using error::error;
};

/// Argument outside the mathematical domain of a law (e.g. V <= 0 for
/// Fowler-Nordheim).
class domain_error : public parameter_error {
 public:
  using parameter_error::parameter_error;
};

/// An iterative method failed. Carries whatever history the method kept so
/// the caller can report it.
class numerical_error : public error {
 public:
  numerical_error(const std::string& what, std::vector<double> history = {})
      : error(what), history_(std::move(history)) {}

  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Raised by single-step updates whose relative state change is too large;
/// callers are expected to substep.
class step_size_error : public numerical_error {
 public:
  step_size_error(const std::string& what, double relative_change)
      : numerical_error(what, {relative_change}) {}
  double relative_change() const noexcept { return history().front(); }
};

/// Least-squares fit could not proceed (rank deficiency, too few points).
class fit_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

class io_error : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  using error::error;
};

}  // namespace nbsto
