#include "uwgan/image_io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "checks.hpp"
#include "uwgan/errors.hpp"

namespace uwgan {

namespace {

constexpr std::array<char, 8> kDepthMagic = {'U', 'W', 'D', 'E', 'P', 'T', 'H', '1'};

cv::Mat to_mat_hwc(const torch::Tensor& chw) {
  auto hwc = chw.detach().to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  cv::Mat mat(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_32FC3,
              hwc.data_ptr<float>());
  return mat.clone();
}

torch::Tensor from_mat_hwc(const cv::Mat& mat) {
  cv::Mat f = mat.isContinuous() ? mat : mat.clone();
  auto t = torch::from_blob(f.data, {f.rows, f.cols, 3}, torch::kFloat32).clone();
  return t.permute({2, 0, 1}).contiguous();
}

}  // namespace

torch::Tensor load_rgb(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError("image not found: " + path.string());
  }
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_COLOR);
  if (raw.empty()) {
    throw IoError("cannot decode image: " + path.string());
  }
  const double scale = raw.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
  cv::Mat rgb;
  cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
  cv::Mat f;
  rgb.convertTo(f, CV_32FC3, scale);
  return from_mat_hwc(f);
}

void save_rgb_png(const std::filesystem::path& path, const torch::Tensor& image) {
  detail::require_chw(image, "save_rgb_png");
  auto bytes = (image.detach().to(torch::kFloat32).clamp(0.0, 1.0) * 255.0)
                   .round()
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .contiguous();
  cv::Mat rgb(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)), CV_8UC3,
              bytes.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  if (!cv::imwrite(path.string(), bgr)) {
    throw IoError("cannot write image: " + path.string());
  }
}

torch::Tensor load_depth(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError("depth not found: " + path.string());
  }
  if (path.extension() == ".bin") {
    std::ifstream in(path, std::ios::binary);
    std::array<char, 8> magic{};
    int32_t h = 0;
    int32_t w = 0;
    in.read(magic.data(), magic.size());
    in.read(reinterpret_cast<char*>(&h), sizeof h);
    in.read(reinterpret_cast<char*>(&w), sizeof w);
    if (!in || magic != kDepthMagic || h <= 0 || w <= 0) {
      throw IoError("bad depth blob header: " + path.string());
    }
    auto depth = torch::empty({h, w}, torch::kFloat32);
    in.read(reinterpret_cast<char*>(depth.data_ptr<float>()),
            static_cast<std::streamsize>(sizeof(float) * h * w));
    if (!in) {
      throw IoError("truncated depth blob: " + path.string());
    }
    return depth;
  }
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  if (raw.empty()) {
    throw IoError("cannot decode depth: " + path.string());
  }
  cv::Mat f;
  raw.convertTo(f, CV_32F);
  return torch::from_blob(f.data, {f.rows, f.cols}, torch::kFloat32).clone();
}

void save_depth_png16(const std::filesystem::path& path, const torch::Tensor& depth) {
  auto d = depth.detach().to(torch::kFloat32).clamp(0.0, 65535.0).round().to(torch::kInt32);
  cv::Mat mat(static_cast<int>(d.size(0)), static_cast<int>(d.size(1)), CV_16UC1);
  auto acc = d.accessor<int32_t, 2>();
  for (int y = 0; y < mat.rows; ++y) {
    for (int x = 0; x < mat.cols; ++x) {
      mat.at<uint16_t>(y, x) = static_cast<uint16_t>(acc[y][x]);
    }
  }
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  if (!cv::imwrite(path.string(), mat)) {
    throw IoError("cannot write depth: " + path.string());
  }
}

void save_depth_blob(const std::filesystem::path& path, const torch::Tensor& depth) {
  auto d = depth.detach().to(torch::kFloat32).contiguous();
  if (d.dim() != 2) {
    throw ValidationError("depth blob expects [H, W]");
  }
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const auto h = static_cast<int32_t>(d.size(0));
  const auto w = static_cast<int32_t>(d.size(1));
  out.write(kDepthMagic.data(), kDepthMagic.size());
  out.write(reinterpret_cast<const char*>(&h), sizeof h);
  out.write(reinterpret_cast<const char*>(&w), sizeof w);
  out.write(reinterpret_cast<const char*>(d.data_ptr<float>()),
            static_cast<std::streamsize>(sizeof(float) * d.numel()));
  if (!out) {
    throw IoError("cannot write depth blob: " + path.string());
  }
}

torch::Tensor quantize_8bit(const torch::Tensor& image) {
  return (image.clamp(0.0, 1.0) * 255.0).round() / 255.0;
}

torch::Tensor resize_bilinear(const torch::Tensor& image, int64_t height, int64_t width) {
  detail::require_chw(image, "resize_bilinear");
  if (image.size(1) == height && image.size(2) == width) {
    return image.clone();
  }
  cv::Mat src = to_mat_hwc(image);
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
             cv::INTER_LINEAR);
  return from_mat_hwc(dst).to(image.scalar_type());
}

torch::Tensor resize_nearest(const torch::Tensor& depth, int64_t height, int64_t width) {
  if (depth.dim() != 2) {
    throw ValidationError("resize_nearest expects [H, W]");
  }
  if (depth.size(0) == height && depth.size(1) == width) {
    return depth.clone();
  }
  auto d = depth.detach().to(torch::kFloat32).contiguous();
  cv::Mat src(static_cast<int>(d.size(0)), static_cast<int>(d.size(1)), CV_32FC1,
              d.data_ptr<float>());
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
             cv::INTER_NEAREST);
  return torch::from_blob(dst.data, {dst.rows, dst.cols}, torch::kFloat32)
      .clone()
      .to(depth.scalar_type());
}

bool is_image_file(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" ||
         ext == ".tiff";
}

}  // namespace uwgan
