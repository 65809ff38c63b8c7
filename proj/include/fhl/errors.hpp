#pragma once

#include <stdexcept>
#include <string>

namespace fhl {

// Parameter outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Argument hits a pole of a special function.
class PoleError : public DomainError {
 public:
  using DomainError::DomainError;
};

class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Quadrature, fixed-point or linear solve failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The discrete operator A - lambda*H is not positive definite.
class IndefiniteError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

}  // namespace fhl
