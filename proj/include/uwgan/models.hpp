#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"

namespace uwgan {

/// Encoder / residual stack / decoder. Channel progression is
/// base, 2*base, 4*base | 9 x 4*base | 2*base, base, 3 with kernels
/// 7,3,3 | 3 | 3,3,7 and strides 1,2,2 | 1 | 2,2,1. base = 64 is the
/// reference network; smaller bases are for desk-scale runs.
struct GeneratorConfig {
  static constexpr int kResidualBlocks = 9;
  int64_t base_filters = 64;
  int64_t pad_multiple = 4;  // inputs are reflect-padded up to this multiple

  void validate() const;
  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

/// Five 4x4 conv layers, filters base*(1,2,4,8) then 1, strides (2,2,2,1,1).
struct DiscriminatorConfig {
  int64_t base_filters = 64;
  double leaky_slope = 0.2;
  int64_t min_input = 16;

  void validate() const;
  nlohmann::json to_json() const;
  static DiscriminatorConfig from_json(const nlohmann::json& j);

  std::vector<int64_t> filters() const;
  static constexpr int kStrides[5] = {2, 2, 2, 1, 1};
};

/// conv -> IN -> ReLU -> conv -> IN, plus the skip connection.
struct ResidualBlockImpl : torch::nn::Module {
  explicit ResidualBlockImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv1{nullptr};
  torch::nn::Conv2d conv2{nullptr};
  torch::nn::InstanceNorm2d norm1{nullptr};
  torch::nn::InstanceNorm2d norm2{nullptr};
};
TORCH_MODULE(ResidualBlock);

struct GeneratorOutput {
  torch::Tensor enhanced;  // [N, 3, H, W] in [0, 1]
  torch::Tensor features;  // [N, 4*base, H'/4, W'/4], H' = H padded
};

struct GeneratorImpl : torch::nn::Module {
  explicit GeneratorImpl(const GeneratorConfig& config = {});

  GeneratorOutput forward(const torch::Tensor& input);
  /// Down-sampling module only; the domain-adaptation feature tap.
  torch::Tensor encode(const torch::Tensor& input);

  const GeneratorConfig& config() const { return config_; }

  torch::nn::Sequential encoder{nullptr};
  torch::nn::Sequential residuals{nullptr};
  torch::nn::Sequential decoder{nullptr};

 private:
  torch::Tensor pad_input(const torch::Tensor& input) const;
  GeneratorConfig config_;
};
TORCH_MODULE(Generator);

/// PatchGAN; emits unbounded logits [N, 1, h', w'].
struct DiscriminatorImpl : torch::nn::Module {
  explicit DiscriminatorImpl(const DiscriminatorConfig& config = {});
  torch::Tensor forward(const torch::Tensor& input);

  const DiscriminatorConfig& config() const { return config_; }

  torch::nn::Sequential layers{nullptr};

 private:
  DiscriminatorConfig config_;
};
TORCH_MODULE(Discriminator);

/// Output grid of the discriminator by layer-wise floor arithmetic.
std::pair<int64_t, int64_t> discriminator_grid(int64_t height, int64_t width);

/// Conv weights ~ N(0, std), conv biases 0, norm scale 1 / offset 0.
void init_weights(torch::nn::Module& network, uint64_t seed, double std = 0.02);

}  // namespace uwgan
