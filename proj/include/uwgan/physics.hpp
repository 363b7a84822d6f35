#pragma once

#include <array>
#include <cstdint>

#include <torch/torch.h>

namespace uwgan {

using Rgb = std::array<double, 3>;

/// Per-image parameters of the underwater formation model.
///
/// `nrer` is the per-channel normalized residual energy ratio (fraction of
/// light surviving one attenuation unit of path), `background` the
/// homogeneous background light, and `depth_scale` converts depth-map units
/// into attenuation units.
struct DegradationParams {
  Rgb nrer{1.0, 1.0, 1.0};
  Rgb background{0.0, 0.0, 0.0};
  double depth_scale = 1.0;

  void validate() const;
};

/// Per-pixel, per-channel medium energy ratio, shape [3, H, W], every value
/// in (0, 1].
class TransmissionMap {
 public:
  explicit TransmissionMap(torch::Tensor values);

  const torch::Tensor& values() const { return values_; }
  int64_t height() const { return values_.size(1); }
  int64_t width() const { return values_.size(2); }

 private:
  torch::Tensor values_;
};

/// Result of the forward formation model before export clipping.
struct Rendered {
  torch::Tensor pixels;          // [3, H, W], unclipped
  int64_t out_of_range = 0;      // elements outside [0, 1]
};

/// [3] -> [3, 1, 1] tensor broadcastable against a [3, H, W] image.
torch::Tensor background_tensor(const Rgb& background,
                                torch::Dtype dtype = torch::kFloat32);

/// t[c] = nrer[c] ^ (depth_scale * depth). `depth` is [H, W].
TransmissionMap compute_transmission(const torch::Tensor& depth,
                                     const DegradationParams& params);

/// I = J * t + B * (1 - t), returned unclipped.
Rendered degrade(const torch::Tensor& clear, const TransmissionMap& t,
                 const Rgb& background);

/// Feedback operator applied to generator output with stored (t, B).
/// Tensor-level and differentiable; accepts [3, H, W] or [N, 3, H, W] for
/// `enhanced`/`t` and a background broadcastable to them.
torch::Tensor regenerate(const torch::Tensor& enhanced, const torch::Tensor& t,
                         const torch::Tensor& background);

torch::Tensor regenerate(const torch::Tensor& enhanced, const TransmissionMap& t,
                         const Rgb& background);

/// J = (I - B * (1 - t)) / t. Throws SingularityError when any t < floor.
torch::Tensor invert_physics(const torch::Tensor& degraded,
                             const TransmissionMap& t, const Rgb& background,
                             double floor = 1e-4);

/// Clamp to [0, 1]; only applied when an image leaves the pipeline.
torch::Tensor clip_for_export(const torch::Tensor& image);

int64_t count_out_of_range(const torch::Tensor& image);

}  // namespace uwgan
