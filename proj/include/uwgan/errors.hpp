#pragma once

#include <stdexcept>
#include <string>

namespace uwgan {

// Bad input shapes, ranges or configuration. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transmission too close to zero for the analytic inverse.
class SingularityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A loss or logit went non-finite during training. CLI exit code 2.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem or codec failure. CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace uwgan
