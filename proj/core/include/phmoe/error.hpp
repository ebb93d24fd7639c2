#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phmoe {

// Bad caller input: violated preconditions, malformed parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation that could not be completed in floating point
// (singular matrix, failed eigen-solve, runaway bracketing).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An observation whose likelihood term underflowed or vanished.
class DegenerateObservation : public NumericalError {
 public:
  DegenerateObservation(std::size_t index, const std::string& what)
      : NumericalError("observation " + std::to_string(index) + ": " + what),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Mean of a heavy-tailed conditional law is not finite.
class InfiniteMean : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Dataset/schema mismatch: unknown level, missing column, bad header.
class SchemaError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace phmoe
