#pragma once

#include <sstream>
#include <string>

#include <torch/torch.h>

#include "uwgan/errors.hpp"

namespace uwgan::detail {

inline std::string shape_str(const torch::Tensor& t) {
  std::ostringstream os;
  os << t.sizes();
  return os.str();
}

// [3, H, W] image.
inline void require_chw(const torch::Tensor& t, const char* what) {
  if (!t.defined() || t.dim() != 3 || t.size(0) != 3) {
    throw ValidationError(std::string(what) + ": expected [3, H, W], got " +
                          (t.defined() ? shape_str(t) : "undefined"));
  }
}

inline void require_same_shape(const torch::Tensor& a, const torch::Tensor& b,
                               const char* what) {
  if (a.sizes() != b.sizes()) {
    throw ValidationError(std::string(what) + ": shape mismatch " + shape_str(a) +
                          " vs " + shape_str(b));
  }
}

}  // namespace uwgan::detail
