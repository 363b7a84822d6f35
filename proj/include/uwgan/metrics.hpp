#pragma once

#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"

namespace uwgan {

struct MetricsConfig {
  // UIQM = c1 * UICM + c2 * UISM + c3 * UIConM
  double c1 = 0.0282;
  double c2 = 0.2953;
  double c3 = 3.5753;
  int block_size = 10;       // EME / AMEE block edge in pixels
  double trim_low = 0.1;     // alpha-trimmed statistics for UICM
  double trim_high = 0.1;
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double ssim_k1 = 0.01;
  double ssim_k2 = 0.03;

  void validate() const;
  nlohmann::json to_json() const;
  static MetricsConfig from_json(const nlohmann::json& j);
};

struct MsePsnr {
  double mse = 0.0;   // 0-255 scale
  double psnr = 0.0;  // dB, +inf when mse == 0
};

/// Inputs are [3, H, W] in [0, 1]; computed on the 8-bit scale (MAX = 255).
MsePsnr mse_psnr(const torch::Tensor& a, const torch::Tensor& b);

/// Mean SSIM on ITU-R 601 luma with a Gaussian window, valid region only.
double ssim(const torch::Tensor& a, const torch::Tensor& b, const MetricsConfig& config = {});

struct UiqmScores {
  double uicm = 0.0;
  double uism = 0.0;
  double uiconm = 0.0;
  double uiqm = 0.0;
};

double uicm(const torch::Tensor& image, const MetricsConfig& config = {});
double uism(const torch::Tensor& image, const MetricsConfig& config = {});
double uiconm(const torch::Tensor& image, const MetricsConfig& config = {});

/// c1 * uicm + c2 * uism + c3 * uiconm.
double combine_uiqm(double uicm_value, double uism_value, double uiconm_value,
                    const MetricsConfig& config = {});

UiqmScores uiqm(const torch::Tensor& image, const MetricsConfig& config = {});

struct ImageMetrics {
  std::string name;
  std::optional<double> mse;
  std::optional<double> psnr;
  std::optional<double> ssim;
  UiqmScores quality;
};

struct MetricsReport {
  std::vector<ImageMetrics> images;

  /// Mean of per-image values (PSNR included; +inf if any image is exact).
  ImageMetrics aggregate() const;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Full-reference terms are filled only when `reference` is defined.
ImageMetrics evaluate_image(const std::string& name, const torch::Tensor& image,
                            const torch::Tensor& reference, const MetricsConfig& config = {});

}  // namespace uwgan
