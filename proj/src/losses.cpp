#include "uwgan/losses.hpp"

#include <cmath>
#include <string>

#include "checks.hpp"
#include "uwgan/errors.hpp"

namespace uwgan {

namespace {

void require_finite(const torch::Tensor& t, const char* what) {
  if (!torch::isfinite(t).all().item<bool>()) {
    throw DivergenceError(std::string("non-finite ") + what);
  }
}

std::optional<double> value_of(const torch::Tensor& t) {
  if (!t.defined()) return std::nullopt;
  return t.item<double>();
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {lambda_cycle, lambda_pixel, lambda_coral}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("loss weights must be finite and nonnegative");
    }
  }
}

nlohmann::json LossBreakdown::to_json() const {
  return {{"l_a", opt_json(l_a)},         {"l_g", opt_json(l_g)},
          {"l_m", opt_json(l_m)},         {"l_pixel", opt_json(l_pixel)},
          {"l_cycle", opt_json(l_cycle)}, {"l_coral", opt_json(l_coral)},
          {"total", total},               {"d_g", opt_json(d_g)},
          {"d_p", opt_json(d_p)}};
}

PixelLosses pixel_losses(const torch::Tensor& enhanced, const torch::Tensor& truth,
                         const torch::Tensor& regenerated, const torch::Tensor& observed) {
  detail::require_same_shape(enhanced, truth, "pixel loss (G(y), x)");
  PixelLosses out;
  out.l_g = (enhanced - truth).abs().mean();
  if (regenerated.defined() != observed.defined()) {
    throw ValidationError("pixel loss: regenerated and observed must be given together");
  }
  if (regenerated.defined()) {
    detail::require_same_shape(regenerated, observed, "pixel loss (y~, y)");
    detail::require_same_shape(enhanced, observed, "pixel loss (G(y), y)");
    out.l_m = (regenerated - observed).abs().mean();
    out.l_pixel = 0.5 * (out.l_g + out.l_m);
  } else {
    out.l_pixel = out.l_g;
  }
  return out;
}

torch::Tensor cycle_loss(const torch::Tensor& re_enhanced, const torch::Tensor& truth) {
  detail::require_same_shape(re_enhanced, truth, "cycle loss");
  return (re_enhanced - truth).abs().mean();
}

torch::Tensor patch_loss(const torch::Tensor& logits, bool real, GanMode mode) {
  const auto target = real ? torch::ones_like(logits) : torch::zeros_like(logits);
  if (mode == GanMode::LeastSquares) {
    return torch::mse_loss(logits, target);
  }
  return torch::binary_cross_entropy_with_logits(logits, target);
}

AdversarialLosses adversarial_losses(const torch::Tensor& dg_real, const torch::Tensor& dg_fake,
                                     const torch::Tensor& dp_real, const torch::Tensor& dp_fake,
                                     GanMode mode) {
  AdversarialLosses out;
  if (dp_real.defined() != dp_fake.defined()) {
    throw ValidationError("adversarial loss: D_p logits must be given together");
  }
  torch::Tensor gen;
  if (dg_real.defined() || dg_fake.defined()) {
    if (!dg_real.defined() || !dg_fake.defined()) {
      throw ValidationError("adversarial loss: D_g logits must be given together");
    }
    require_finite(dg_real, "D_g logits (real)");
    require_finite(dg_fake, "D_g logits (fake)");
    out.d_g = patch_loss(dg_real, true, mode) + patch_loss(dg_fake, false, mode);
    gen = patch_loss(dg_fake, true, mode);
  }
  if (dp_real.defined()) {
    require_finite(dp_real, "D_p logits (real)");
    require_finite(dp_fake, "D_p logits (fake)");
    out.d_p = patch_loss(dp_real, true, mode) + patch_loss(dp_fake, false, mode);
    auto g = patch_loss(dp_fake, true, mode);
    gen = gen.defined() ? gen + g : g;
  }
  out.generator = gen;
  return out;
}

torch::Tensor generator_adversarial_loss(const torch::Tensor& dg_fake, const torch::Tensor& dp_fake,
                                         GanMode mode) {
  require_finite(dg_fake, "D_g logits (fake)");
  auto loss = patch_loss(dg_fake, true, mode);
  if (dp_fake.defined()) {
    require_finite(dp_fake, "D_p logits (fake)");
    loss = loss + patch_loss(dp_fake, true, mode);
  }
  return loss;
}

torch::Tensor as_descriptors(const torch::Tensor& features) {
  if (features.dim() == 3) {
    return features.reshape({features.size(0), -1}).t();
  }
  if (features.dim() == 4) {
    return features.permute({0, 2, 3, 1}).reshape({-1, features.size(1)});
  }
  throw ValidationError("features: expected [d, h, w] or [N, d, h, w], got " +
                        detail::shape_str(features));
}

torch::Tensor feature_covariance(const torch::Tensor& descriptors) {
  const int64_t n = descriptors.size(0);
  if (n < 2) {
    throw ValidationError("covariance needs at least 2 descriptors, got " + std::to_string(n));
  }
  const auto column_sums = descriptors.sum(0, /*keepdim=*/true);  // 1^T F, [1, d]
  const auto gram = descriptors.t().mm(descriptors);                // F^T F
  return (gram - column_sums.t().mm(column_sums) / static_cast<double>(n)) /
         static_cast<double>(n - 1);
}

torch::Tensor coral_loss(const torch::Tensor& source, const torch::Tensor& target) {
  const auto fs = source.dim() == 2 ? source : as_descriptors(source);
  const auto ft = target.dim() == 2 ? target : as_descriptors(target);
  if (fs.size(1) != ft.size(1)) {
    throw ValidationError("coral: channel mismatch " + std::to_string(fs.size(1)) + " vs " +
                          std::to_string(ft.size(1)));
  }
  const auto d = static_cast<double>(fs.size(1));
  const auto diff = feature_covariance(fs) - feature_covariance(ft);
  return diff.pow(2).sum() / (4.0 * d * d);
}

WeightedLoss total_loss(const LossTerms& terms, const LossWeights& weights) {
  weights.validate();
  WeightedLoss out;
  auto& b = out.breakdown;
  b.l_a = value_of(terms.l_a);
  b.l_g = value_of(terms.l_g);
  b.l_m = value_of(terms.l_m);
  b.l_pixel = value_of(terms.l_pixel);
  b.l_cycle = value_of(terms.l_cycle);
  b.l_coral = value_of(terms.l_coral);
  for (const auto* v : {&b.l_a, &b.l_g, &b.l_m, &b.l_pixel, &b.l_cycle, &b.l_coral}) {
    if (*v && !std::isfinite(**v)) {
      throw DivergenceError("non-finite loss component");
    }
  }

  torch::Tensor total;
  const auto add = [&total](const torch::Tensor& term, double weight) {
    if (!term.defined() || weight == 0.0) return;
    auto w = weight == 1.0 ? term : term * weight;
    total = total.defined() ? total + w : w;
  };
  add(terms.l_a, 1.0);
  add(terms.l_cycle, weights.lambda_cycle);
  add(terms.l_pixel, weights.lambda_pixel);
  add(terms.l_coral, weights.lambda_coral);
  if (!total.defined()) {
    total = torch::zeros({}, torch::kFloat32);
  }
  out.total = total;
  // Reported total recomposed in double from the logged components.
  const auto weighted = [](const std::optional<double>& v, double w) {
    return v && w != 0.0 ? w * *v : 0.0;
  };
  b.total = weighted(b.l_a, 1.0) + weighted(b.l_cycle, weights.lambda_cycle) +
            weighted(b.l_pixel, weights.lambda_pixel) + weighted(b.l_coral, weights.lambda_coral);
  if (!std::isfinite(b.total)) {
    throw DivergenceError("non-finite total loss");
  }
  return out;
}

}  // namespace uwgan
