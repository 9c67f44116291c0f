#pragma once

#include <stdexcept>
#include <string>

namespace corrml {

// Bad input: malformed files, schema mismatches, invariant violations in
// user-provided data. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown during training or prediction (failed factorization,
// non-finite loss). The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace corrml
