#pragma once

#include <stdexcept>
#include <string>

namespace remqst {

/// Invalid input: wrong dimensions, unphysical parameters, malformed config.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file or JSON document does not match the expected schema.
class SchemaError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// An iterative method failed to reach its stopping criterion, or a
/// numerical invariant broke down (e.g. a degenerate particle bank).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace remqst
