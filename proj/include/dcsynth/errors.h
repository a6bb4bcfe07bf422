#pragma once

#include <stdexcept>
#include <string>

namespace dcsynth {

/// Malformed input: wrong dimensions, schema violations, broken invariants.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative kernel failed to converge or lost accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear matrix equation has no unique solution.
class NoUniqueSolutionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace dcsynth
