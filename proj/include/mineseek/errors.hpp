#pragma once

#include <stdexcept>
#include <string>

namespace mineseek {

/// Malformed input: dimension mismatch, infeasible point, bad parameter.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Request outside the mathematical domain of an operation (e.g. s^-1 past its cap).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Object in a state that does not support the operation (e.g. asymmetric coupling
/// when a potential is requested).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An enumeration would exceed its configured cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem structure the solvers cannot certify (non-PSD quadratic block, ...).
class UnsupportedStructure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Construction of a derived object failed a structural check.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A modelling assumption an algorithm relies on does not hold for the input.
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mineseek
