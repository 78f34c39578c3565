#pragma once

#include <stdexcept>
#include <string>

namespace bard {

// Argument outside the mathematical domain of an operation (e.g. a zero length).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid parameters or configuration (bad LOS law, unnormalised quadrature, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input files; messages carry the row/column location where known.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Floating point failure during inference: zero total mass, non-finite likelihood.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bard
