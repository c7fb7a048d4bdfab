#pragma once

#include <stdexcept>
#include <string>

namespace ordlin {

/// Caller broke a documented precondition (shape mismatch, overlapping vertex sets, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input data could not be parsed or is inconsistent.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical computation produced a non-finite value.
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested rank dimension has no implementation on this path.
class UnsupportedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ordlin
