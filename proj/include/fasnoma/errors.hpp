#pragma once

#include <stdexcept>
#include <string>

namespace fasnoma {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration (orders out of range, schema violations, bad
/// parameter combinations). The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not be completed to a finite, trustworthy value.
/// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An integrand returned a non-finite value at a quadrature node.
class EvaluationError : public NumericalError {
 public:
  EvaluationError(const std::string& what, double node)
      : NumericalError(what + " (node=" + std::to_string(node) + ")"), node_(node) {}

  double node() const noexcept { return node_; }

 private:
  double node_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fasnoma
