#pragma once

#include <optional>

#include <torch/torch.h>

#include "json.hpp"

namespace uwgan {

/// Weights of the cycle, pixel and CORAL terms. A zero weight removes its
/// term from the objective entirely.
struct LossWeights {
  double lambda_cycle = 10.0;
  double lambda_pixel = 10.0;
  double lambda_coral = 1.0;

  void validate() const;
};

/// Scalar loss values for one step. Terms that were not computed (ablated
/// or zero-weighted) are empty rather than zero.
struct LossBreakdown {
  std::optional<double> l_a;  // generator-side adversarial loss
  std::optional<double> l_g;
  std::optional<double> l_m;
  std::optional<double> l_pixel;
  std::optional<double> l_cycle;
  std::optional<double> l_coral;
  double total = 0.0;

  // Discriminator-side losses, logged alongside.
  std::optional<double> d_g;
  std::optional<double> d_p;

  nlohmann::json to_json() const;
};

struct PixelLosses {
  torch::Tensor l_g;
  torch::Tensor l_m;  // undefined when no regenerated image was supplied
  torch::Tensor l_pixel;
};

/// l_g = mean|G(y) - x|, l_m = mean|y~ - y|, l_pixel = (l_g + l_m) / 2.
/// Passing undefined `regenerated`/`observed` yields l_pixel = l_g.
PixelLosses pixel_losses(const torch::Tensor& enhanced, const torch::Tensor& truth,
                         const torch::Tensor& regenerated = {},
                         const torch::Tensor& observed = {});

/// mean|G(y~) - x|.
torch::Tensor cycle_loss(const torch::Tensor& re_enhanced, const torch::Tensor& truth);

enum class GanMode { Bce, LeastSquares };

/// Patch-averaged loss pushing `logits` toward real (1) or fake (0).
torch::Tensor patch_loss(const torch::Tensor& logits, bool real, GanMode mode = GanMode::Bce);

struct AdversarialLosses {
  torch::Tensor d_g;        // D_g: x -> real, G(y) -> fake
  torch::Tensor d_p;        // D_p: y -> real, y~ -> fake (undefined without feedback)
  torch::Tensor generator;  // non-saturating: G(y) and y~ scored as real
};

/// Any of dp_* may be undefined (feedback path disabled). Throws
/// DivergenceError on non-finite logits.
AdversarialLosses adversarial_losses(const torch::Tensor& dg_real, const torch::Tensor& dg_fake,
                                     const torch::Tensor& dp_real, const torch::Tensor& dp_fake,
                                     GanMode mode = GanMode::Bce);

/// Non-saturating generator term: fake logits of D_g and (optionally) D_p
/// scored as real.
torch::Tensor generator_adversarial_loss(const torch::Tensor& dg_fake, const torch::Tensor& dp_fake,
                                         GanMode mode = GanMode::Bce);

/// Covariance of the rows of a [n, d] descriptor matrix, 1/(n-1) scaled.
torch::Tensor feature_covariance(const torch::Tensor& descriptors);

/// [d, h, w] or [N, d, h, w] features -> [n, d] descriptors, n = N*h*w.
torch::Tensor as_descriptors(const torch::Tensor& features);

/// ||C_S - C_T||_F^2 / (4 d^2).
torch::Tensor coral_loss(const torch::Tensor& source, const torch::Tensor& target);

/// Inputs for the weighted objective; undefined tensors are absent terms.
struct LossTerms {
  torch::Tensor l_a;
  torch::Tensor l_g;
  torch::Tensor l_m;
  torch::Tensor l_pixel;
  torch::Tensor l_cycle;
  torch::Tensor l_coral;
};

struct WeightedLoss {
  torch::Tensor total;  // differentiable
  LossBreakdown breakdown;
};

/// total = l_a + lambda_cycle*l_cycle + lambda_pixel*l_pixel + lambda_coral*l_coral.
/// Throws DivergenceError if any present term is non-finite.
WeightedLoss total_loss(const LossTerms& terms, const LossWeights& weights);

}  // namespace uwgan
