#include "uwgan/models.hpp"

#include <string>

#include "checks.hpp"
#include "uwgan/errors.hpp"

namespace nn = torch::nn;

namespace uwgan {

namespace {

nn::InstanceNorm2d instance_norm(int64_t channels) {
  return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(true));
}

void require_images(const torch::Tensor& x, const char* who) {
  if (!x.defined() || x.dim() != 4 || x.size(1) != 3) {
    throw ValidationError(std::string(who) + ": expected [N, 3, H, W], got " +
                          (x.defined() ? detail::shape_str(x) : "undefined"));
  }
}

// 4x4 kernel, stride 1, output size == input size: pad 1 before, 2 after.
constexpr int64_t kSameLo = 1;
constexpr int64_t kSameHi = 2;

}  // namespace

void GeneratorConfig::validate() const {
  if (base_filters < 1) throw ValidationError("generator base_filters must be >= 1");
  if (pad_multiple != 4) throw ValidationError("generator pad_multiple must be 4");
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"base_filters", base_filters},
          {"residual_blocks", kResidualBlocks},
          {"pad_multiple", pad_multiple}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.base_filters = j.value("base_filters", c.base_filters);
  c.pad_multiple = j.value("pad_multiple", c.pad_multiple);
  if (j.value("residual_blocks", kResidualBlocks) != kResidualBlocks) {
    throw ValidationError("generator must have exactly 9 residual blocks");
  }
  c.validate();
  return c;
}

void DiscriminatorConfig::validate() const {
  if (base_filters < 1) throw ValidationError("discriminator base_filters must be >= 1");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw ValidationError("leaky_slope must lie in [0, 1)");
  }
}

nlohmann::json DiscriminatorConfig::to_json() const {
  return {{"base_filters", base_filters}, {"leaky_slope", leaky_slope}, {"min_input", min_input}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.base_filters = j.value("base_filters", c.base_filters);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.min_input = j.value("min_input", c.min_input);
  c.validate();
  return c;
}

std::vector<int64_t> DiscriminatorConfig::filters() const {
  return {base_filters, 2 * base_filters, 4 * base_filters, 8 * base_filters, 1};
}

ResidualBlockImpl::ResidualBlockImpl(int64_t channels)
    : conv1(nn::Conv2dOptions(channels, channels, 3).padding(1).padding_mode(torch::kReflect)),
      conv2(nn::Conv2dOptions(channels, channels, 3).padding(1).padding_mode(torch::kReflect)),
      norm1(instance_norm(channels)),
      norm2(instance_norm(channels)) {
  register_module("conv1", conv1);
  register_module("norm1", norm1);
  register_module("conv2", conv2);
  register_module("norm2", norm2);
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  auto h = torch::relu(norm1(conv1(x)));
  return x + norm2(conv2(h));
}

GeneratorImpl::GeneratorImpl(const GeneratorConfig& config) : config_(config) {
  config_.validate();
  const int64_t b = config_.base_filters;

  encoder = nn::Sequential(
      // CINR_1
      nn::ReflectionPad2d(3), nn::Conv2d(nn::Conv2dOptions(3, b, 7)), instance_norm(b),
      nn::ReLU(),
      // CINR_2
      nn::Conv2d(nn::Conv2dOptions(b, 2 * b, 3).stride(2).padding(1)), instance_norm(2 * b),
      nn::ReLU(),
      // CINR_3
      nn::Conv2d(nn::Conv2dOptions(2 * b, 4 * b, 3).stride(2).padding(1)), instance_norm(4 * b),
      nn::ReLU());

  residuals = nn::Sequential();
  for (int i = 0; i < GeneratorConfig::kResidualBlocks; ++i) {
    residuals->push_back(ResidualBlock(4 * b));
  }

  decoder = nn::Sequential(
      // CTINR_1
      nn::ConvTranspose2d(
          nn::ConvTranspose2dOptions(4 * b, 2 * b, 3).stride(2).padding(1).output_padding(1)),
      instance_norm(2 * b), nn::ReLU(),
      // CTINR_2
      nn::ConvTranspose2d(
          nn::ConvTranspose2dOptions(2 * b, b, 3).stride(2).padding(1).output_padding(1)),
      instance_norm(b), nn::ReLU(),
      // CINR_4: output layer, tanh mapped to [0, 1]
      nn::ReflectionPad2d(3), nn::Conv2d(nn::Conv2dOptions(b, 3, 7)));

  register_module("encoder", encoder);
  register_module("residuals", residuals);
  register_module("decoder", decoder);
}

torch::Tensor GeneratorImpl::pad_input(const torch::Tensor& input) const {
  const int64_t m = config_.pad_multiple;
  const int64_t pad_h = (m - input.size(2) % m) % m;
  const int64_t pad_w = (m - input.size(3) % m) % m;
  if (pad_h == 0 && pad_w == 0) return input;
  return torch::nn::functional::pad(
      input, torch::nn::functional::PadFuncOptions({0, pad_w, 0, pad_h}).mode(torch::kReflect));
}

torch::Tensor GeneratorImpl::encode(const torch::Tensor& input) {
  require_images(input, "generator");
  return encoder->forward(pad_input(input));
}

GeneratorOutput GeneratorImpl::forward(const torch::Tensor& input) {
  require_images(input, "generator");
  const int64_t h = input.size(2);
  const int64_t w = input.size(3);
  auto features = encoder->forward(pad_input(input));
  auto decoded = decoder->forward(residuals->forward(features));
  auto out = (torch::tanh(decoded) + 1.0) * 0.5;
  if (out.size(2) != h || out.size(3) != w) {
    out = out.narrow(2, 0, h).narrow(3, 0, w);
  }
  return {out, features};
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorConfig& config) : config_(config) {
  config_.validate();
  const auto f = config_.filters();
  const auto lrelu = [&] {
    return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(config_.leaky_slope));
  };
  layers = nn::Sequential(
      // CINLR_1..3: stride 2 halves the grid
      nn::Conv2d(nn::Conv2dOptions(3, f[0], 4).stride(2).padding(1)), instance_norm(f[0]), lrelu(),
      nn::Conv2d(nn::Conv2dOptions(f[0], f[1], 4).stride(2).padding(1)), instance_norm(f[1]),
      lrelu(),
      nn::Conv2d(nn::Conv2dOptions(f[1], f[2], 4).stride(2).padding(1)), instance_norm(f[2]),
      lrelu(),
      // CINLR_4: stride 1, size preserving
      nn::ZeroPad2d(nn::ZeroPad2dOptions({kSameLo, kSameHi, kSameLo, kSameHi})),
      nn::Conv2d(nn::Conv2dOptions(f[2], f[3], 4)), instance_norm(f[3]), lrelu(),
      // final logit map: no norm, no activation
      nn::ZeroPad2d(nn::ZeroPad2dOptions({kSameLo, kSameHi, kSameLo, kSameHi})),
      nn::Conv2d(nn::Conv2dOptions(f[3], f[4], 4)));
  register_module("layers", layers);
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& input) {
  require_images(input, "discriminator");
  if (input.size(2) < config_.min_input || input.size(3) < config_.min_input) {
    throw ValidationError("discriminator input " + std::to_string(input.size(2)) + "x" +
                          std::to_string(input.size(3)) + " smaller than minimum " +
                          std::to_string(config_.min_input) + "x" +
                          std::to_string(config_.min_input));
  }
  return layers->forward(input);
}

std::pair<int64_t, int64_t> discriminator_grid(int64_t height, int64_t width) {
  for (int i = 0; i < 3; ++i) {
    height = (height + 2 - 4) / 2 + 1;
    width = (width + 2 - 4) / 2 + 1;
  }
  for (int i = 0; i < 2; ++i) {
    height = height + kSameLo + kSameHi - 4 + 1;
    width = width + kSameLo + kSameHi - 4 + 1;
  }
  return {height, width};
}

void init_weights(torch::nn::Module& network, uint64_t seed, double std) {
  torch::NoGradGuard no_grad;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& module : network.modules(/*include_self=*/true)) {
    if (auto* conv = module->as<nn::Conv2d>()) {
      conv->weight.normal_(0.0, std, gen);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* convt = module->as<nn::ConvTranspose2d>()) {
      convt->weight.normal_(0.0, std, gen);
      if (convt->bias.defined()) convt->bias.zero_();
    } else if (auto* norm = module->as<nn::InstanceNorm2d>()) {
      if (norm->weight.defined()) norm->weight.fill_(1.0);
      if (norm->bias.defined()) norm->bias.zero_();
    }
  }
}

}  // namespace uwgan
