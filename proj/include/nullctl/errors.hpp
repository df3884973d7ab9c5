#pragma once

#include <stdexcept>
#include <string>

namespace nullctl {

/// Input does not parse or does not match the documented file schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The computation was refused because the numbers cannot be trusted
/// (ill-conditioned Gramian, invisible mode combination, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nullctl
