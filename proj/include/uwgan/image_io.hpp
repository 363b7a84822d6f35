#pragma once

#include <filesystem>

#include <torch/torch.h>

namespace uwgan {

/// Decodes an 8/16-bit color image into a float [3, H, W] RGB tensor in [0, 1].
/// Throws IoError when the file is missing or undecodable.
torch::Tensor load_rgb(const std::filesystem::path& path);

/// Clips, quantizes to 8 bits and writes a PNG.
void save_rgb_png(const std::filesystem::path& path, const torch::Tensor& image);

/// Raw depth in file units as float [H, W]. Accepts single-channel 8/16-bit
/// PNG or the float blob written by save_depth_blob (".bin").
torch::Tensor load_depth(const std::filesystem::path& path);

void save_depth_png16(const std::filesystem::path& path, const torch::Tensor& depth);
void save_depth_blob(const std::filesystem::path& path, const torch::Tensor& depth);

/// Round-to-nearest 8-bit quantization, result stays float in [0, 1].
torch::Tensor quantize_8bit(const torch::Tensor& image);

torch::Tensor resize_bilinear(const torch::Tensor& image, int64_t height, int64_t width);
torch::Tensor resize_nearest(const torch::Tensor& depth, int64_t height, int64_t width);

bool is_image_file(const std::filesystem::path& path);

}  // namespace uwgan
