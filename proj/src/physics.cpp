#include "uwgan/physics.hpp"

#include <cmath>
#include <string>

#include "checks.hpp"
#include "uwgan/errors.hpp"

namespace uwgan {

void DegradationParams::validate() const {
  for (int c = 0; c < 3; ++c) {
    if (!(nrer[c] > 0.0 && nrer[c] <= 1.0)) {
      throw ValidationError("nrer[" + std::to_string(c) + "] = " + std::to_string(nrer[c]) +
                            " outside (0, 1]");
    }
    if (!(background[c] >= 0.0 && background[c] <= 1.0)) {
      throw ValidationError("background[" + std::to_string(c) + "] = " +
                            std::to_string(background[c]) + " outside [0, 1]");
    }
  }
  if (!(depth_scale > 0.0) || !std::isfinite(depth_scale)) {
    throw ValidationError("depth_scale must be positive and finite");
  }
}

TransmissionMap::TransmissionMap(torch::Tensor values) : values_(std::move(values)) {
  detail::require_chw(values_, "transmission map");
  const auto bad = torch::logical_or(values_.le(0.0), values_.gt(1.0))
                       .logical_or(values_.isnan())
                       .sum()
                       .item<int64_t>();
  if (bad > 0) {
    throw ValidationError("transmission map has " + std::to_string(bad) +
                          " elements outside (0, 1]");
  }
}

torch::Tensor background_tensor(const Rgb& background, torch::Dtype dtype) {
  return torch::tensor({background[0], background[1], background[2]},
                       torch::TensorOptions().dtype(torch::kFloat64))
      .to(dtype)
      .view({3, 1, 1});
}

TransmissionMap compute_transmission(const torch::Tensor& depth,
                                     const DegradationParams& params) {
  params.validate();
  if (!depth.defined() || depth.dim() != 2) {
    throw ValidationError("depth: expected [H, W], got " +
                          (depth.defined() ? detail::shape_str(depth) : "undefined"));
  }
  const auto invalid =
      torch::logical_or(depth.lt(0.0), depth.isfinite().logical_not()).sum().item<int64_t>();
  if (invalid > 0) {
    throw ValidationError("depth map has " + std::to_string(invalid) +
                          " invalid pixels (negative or non-finite)");
  }
  const auto exponent = depth.unsqueeze(0) * params.depth_scale;  // [1, H, W]
  const auto base = torch::tensor({params.nrer[0], params.nrer[1], params.nrer[2]},
                                  torch::TensorOptions().dtype(torch::kFloat64))
                        .to(depth.scalar_type())
                        .view({3, 1, 1});
  // pow underflows to 0 only for absurd depths; keep the (0, 1] invariant.
  auto t = torch::pow(base, exponent);
  const double tiny = depth.scalar_type() == torch::kFloat64 ? 1e-300 : 1e-38;
  return TransmissionMap(t.clamp_min(tiny));
}

Rendered degrade(const torch::Tensor& clear, const TransmissionMap& t, const Rgb& background) {
  detail::require_chw(clear, "clear image");
  detail::require_same_shape(clear, t.values(), "degrade");
  Rendered out;
  out.pixels = regenerate(clear, t.values(), background_tensor(background, clear.scalar_type()));
  out.out_of_range = count_out_of_range(out.pixels);
  return out;
}

torch::Tensor regenerate(const torch::Tensor& enhanced, const torch::Tensor& t,
                         const torch::Tensor& background) {
  if (enhanced.sizes() != t.sizes()) {
    throw ValidationError("regenerate: shape mismatch " + detail::shape_str(enhanced) +
                          " vs " + detail::shape_str(t));
  }
  const int64_t channel_dim = enhanced.dim() - 3;
  if (channel_dim < 0 || enhanced.size(channel_dim) != 3) {
    throw ValidationError("regenerate: expected [..., 3, H, W], got " +
                          detail::shape_str(enhanced));
  }
  return enhanced * t + background * (1.0 - t);
}

torch::Tensor regenerate(const torch::Tensor& enhanced, const TransmissionMap& t,
                         const Rgb& background) {
  detail::require_chw(enhanced, "enhanced image");
  return regenerate(enhanced, t.values(), background_tensor(background, enhanced.scalar_type()));
}

torch::Tensor invert_physics(const torch::Tensor& degraded, const TransmissionMap& t,
                             const Rgb& background, double floor) {
  detail::require_chw(degraded, "degraded image");
  detail::require_same_shape(degraded, t.values(), "invert_physics");
  const auto below = t.values().lt(floor).sum().item<int64_t>();
  if (below > 0) {
    throw SingularityError("transmission has " + std::to_string(below) +
                           " elements below floor " + std::to_string(floor));
  }
  const auto b = background_tensor(background, degraded.scalar_type());
  const auto& tv = t.values();
  return (degraded - b * (1.0 - tv)) / tv;
}

torch::Tensor clip_for_export(const torch::Tensor& image) { return image.clamp(0.0, 1.0); }

int64_t count_out_of_range(const torch::Tensor& image) {
  return torch::logical_or(image.lt(0.0), image.gt(1.0)).sum().item<int64_t>();
}

}  // namespace uwgan
