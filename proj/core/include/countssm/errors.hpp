#pragma once

#include <stdexcept>
#include <string>

namespace countssm {

// Malformed input files, bad configuration, inadmissible parameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure during estimation (rank deficiency, no usable start).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the quadrature verification oracle when it cannot certify
// its own accuracy.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace countssm
