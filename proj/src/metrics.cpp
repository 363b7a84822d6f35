#include "uwgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "checks.hpp"
#include "uwgan/errors.hpp"

namespace uwgan {

namespace {

// Row-major single-channel plane on the 0-255 scale.
struct Plane {
  int64_t h = 0;
  int64_t w = 0;
  std::vector<double> v;

  double& at(int64_t y, int64_t x) { return v[static_cast<size_t>(y * w + x)]; }
  double at(int64_t y, int64_t x) const { return v[static_cast<size_t>(y * w + x)]; }
};

std::array<Plane, 3> to_planes(const torch::Tensor& image) {
  detail::require_chw(image, "metrics");
  auto d = (image.detach().to(torch::kFloat64) * 255.0).contiguous();
  const int64_t h = d.size(1);
  const int64_t w = d.size(2);
  const double* p = d.data_ptr<double>();
  std::array<Plane, 3> out;
  for (int c = 0; c < 3; ++c) {
    out[c].h = h;
    out[c].w = w;
    out[c].v.assign(p + c * h * w, p + (c + 1) * h * w);
  }
  return out;
}

Plane luma(const std::array<Plane, 3>& rgb) {
  Plane y{rgb[0].h, rgb[0].w, std::vector<double>(rgb[0].v.size())};
  for (size_t i = 0; i < y.v.size(); ++i) {
    y.v[i] = 0.299 * rgb[0].v[i] + 0.587 * rgb[1].v[i] + 0.114 * rgb[2].v[i];
  }
  return y;
}

// Separable 'valid' Gaussian filtering.
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
  const auto n = static_cast<int64_t>(k.size());
  Plane rows{in.h, in.w - n + 1, {}};
  rows.v.assign(static_cast<size_t>(rows.h * rows.w), 0.0);
  for (int64_t y = 0; y < rows.h; ++y) {
    for (int64_t x = 0; x < rows.w; ++x) {
      double s = 0.0;
      for (int64_t i = 0; i < n; ++i) s += k[i] * in.at(y, x + i);
      rows.at(y, x) = s;
    }
  }
  Plane out{in.h - n + 1, rows.w, {}};
  out.v.assign(static_cast<size_t>(out.h * out.w), 0.0);
  for (int64_t y = 0; y < out.h; ++y) {
    for (int64_t x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int64_t i = 0; i < n; ++i) s += k[i] * rows.at(y + i, x);
      out.at(y, x) = s;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.h, a.w, std::vector<double>(a.v.size())};
  for (size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

// Symmetric border, matching the usual scipy 'reflect' mode.
int64_t reflect_index(int64_t i, int64_t n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

// Sobel magnitude scaled so its maximum is 255 (zero map stays zero).
Plane sobel_magnitude(const Plane& p) {
  Plane mag{p.h, p.w, std::vector<double>(p.v.size(), 0.0)};
  double peak = 0.0;
  for (int64_t y = 0; y < p.h; ++y) {
    for (int64_t x = 0; x < p.w; ++x) {
      auto px = [&](int64_t dy, int64_t dx) {
        return p.at(reflect_index(y + dy, p.h), reflect_index(x + dx, p.w));
      };
      const double gx = (px(-1, 1) + 2 * px(0, 1) + px(1, 1)) - (px(-1, -1) + 2 * px(0, -1) + px(1, -1));
      const double gy = (px(1, -1) + 2 * px(1, 0) + px(1, 1)) - (px(-1, -1) + 2 * px(-1, 0) + px(-1, 1));
      const double m = std::hypot(gx, gy);
      mag.at(y, x) = m;
      peak = std::max(peak, m);
    }
  }
  if (peak > 0.0) {
    for (auto& m : mag.v) m *= 255.0 / peak;
  }
  return mag;
}

// Enhancement measure: 2/(k1 k2) * sum log(max/min) over blocks.
double eme(const Plane& p, int block) {
  const int64_t k1 = p.w / block;
  const int64_t k2 = p.h / block;
  if (k1 == 0 || k2 == 0) return 0.0;
  double sum = 0.0;
  for (int64_t by = 0; by < k2; ++by) {
    for (int64_t bx = 0; bx < k1; ++bx) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int64_t y = by * block; y < (by + 1) * block; ++y) {
        for (int64_t x = bx * block; x < (bx + 1) * block; ++x) {
          lo = std::min(lo, p.at(y, x));
          hi = std::max(hi, p.at(y, x));
        }
      }
      if (lo > 0.0 && hi > 0.0) sum += std::log(hi / lo);
    }
  }
  return 2.0 / static_cast<double>(k1 * k2) * sum;
}

struct TrimmedStats {
  double mean = 0.0;
  double variance = 0.0;
};

TrimmedStats alpha_trimmed(std::vector<double> values, double trim_low, double trim_high) {
  const auto k = static_cast<int64_t>(values.size());
  std::sort(values.begin(), values.end());
  const auto lo = static_cast<int64_t>(std::ceil(trim_low * static_cast<double>(k)));
  const auto hi = static_cast<int64_t>(std::floor(trim_high * static_cast<double>(k)));
  TrimmedStats s;
  const int64_t kept = k - lo - hi;
  if (kept <= 0) return s;
  s.mean = std::accumulate(values.begin() + lo, values.end() - hi, 0.0) / static_cast<double>(kept);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / static_cast<double>(k);
  return s;
}

std::string fmt(const std::optional<double>& v, int precision = 4) {
  if (!v) return "-";
  if (std::isinf(*v)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

nlohmann::json num_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return "inf";
  return *v;
}

}  // namespace

void MetricsConfig::validate() const {
  if (block_size < 1) throw ValidationError("metrics block_size must be >= 1");
  if (trim_low < 0.0 || trim_high < 0.0 || trim_low + trim_high >= 1.0) {
    throw ValidationError("UICM trim fractions must be >= 0 and sum below 1");
  }
  if (ssim_window < 1 || ssim_window % 2 == 0 || !(ssim_sigma > 0.0)) {
    throw ValidationError("SSIM window must be odd and sigma positive");
  }
}

nlohmann::json MetricsConfig::to_json() const {
  return {{"c1", c1},
          {"c2", c2},
          {"c3", c3},
          {"block_size", block_size},
          {"trim_low", trim_low},
          {"trim_high", trim_high},
          {"ssim_window", ssim_window},
          {"ssim_sigma", ssim_sigma},
          {"ssim_k1", ssim_k1},
          {"ssim_k2", ssim_k2}};
}

MetricsConfig MetricsConfig::from_json(const nlohmann::json& j) {
  MetricsConfig c;
  c.c1 = j.value("c1", c.c1);
  c.c2 = j.value("c2", c.c2);
  c.c3 = j.value("c3", c.c3);
  c.block_size = j.value("block_size", c.block_size);
  c.trim_low = j.value("trim_low", c.trim_low);
  c.trim_high = j.value("trim_high", c.trim_high);
  c.ssim_window = j.value("ssim_window", c.ssim_window);
  c.ssim_sigma = j.value("ssim_sigma", c.ssim_sigma);
  c.ssim_k1 = j.value("ssim_k1", c.ssim_k1);
  c.ssim_k2 = j.value("ssim_k2", c.ssim_k2);
  c.validate();
  return c;
}

MsePsnr mse_psnr(const torch::Tensor& a, const torch::Tensor& b) {
  detail::require_chw(a, "mse");
  detail::require_same_shape(a, b, "mse");
  MsePsnr out;
  const auto diff = (a.to(torch::kFloat64) - b.to(torch::kFloat64)) * 255.0;
  out.mse = diff.pow(2).mean().item<double>();
  out.psnr = out.mse == 0.0 ? std::numeric_limits<double>::infinity()
                            : 10.0 * std::log10(255.0 * 255.0 / out.mse);
  return out;
}

double ssim(const torch::Tensor& a, const torch::Tensor& b, const MetricsConfig& config) {
  config.validate();
  detail::require_chw(a, "ssim");
  detail::require_same_shape(a, b, "ssim");
  if (a.size(1) < config.ssim_window || a.size(2) < config.ssim_window) {
    throw ValidationError("ssim: image smaller than the " + std::to_string(config.ssim_window) +
                          "x" + std::to_string(config.ssim_window) + " window");
  }
  const auto ya = luma(to_planes(a));
  const auto yb = luma(to_planes(b));

  std::vector<double> k(static_cast<size_t>(config.ssim_window));
  const int half = config.ssim_window / 2;
  for (int i = 0; i < config.ssim_window; ++i) {
    const double x = i - half;
    k[i] = std::exp(-x * x / (2.0 * config.ssim_sigma * config.ssim_sigma));
  }
  const double ksum = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& v : k) v /= ksum;

  const double c1 = std::pow(config.ssim_k1 * 255.0, 2);
  const double c2 = std::pow(config.ssim_k2 * 255.0, 2);
  const auto mu_a = filter_valid(ya, k);
  const auto mu_b = filter_valid(yb, k);
  const auto s_aa = filter_valid(product(ya, ya), k);
  const auto s_bb = filter_valid(product(yb, yb), k);
  const auto s_ab = filter_valid(product(ya, yb), k);
  double total = 0.0;
  for (size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i];
    const double mb = mu_b.v[i];
    const double va = s_aa.v[i] - ma * ma;
    const double vb = s_bb.v[i] - mb * mb;
    const double cov = s_ab.v[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.v.size());
}

double uicm(const torch::Tensor& image, const MetricsConfig& config) {
  config.validate();
  const auto rgb = to_planes(image);
  const size_t n = rgb[0].v.size();
  std::vector<double> rg(n);
  std::vector<double> yb(n);
  for (size_t i = 0; i < n; ++i) {
    rg[i] = rgb[0].v[i] - rgb[1].v[i];
    yb[i] = 0.5 * (rgb[0].v[i] + rgb[1].v[i]) - rgb[2].v[i];
  }
  const auto s_rg = alpha_trimmed(std::move(rg), config.trim_low, config.trim_high);
  const auto s_yb = alpha_trimmed(std::move(yb), config.trim_low, config.trim_high);
  return -0.0268 * std::sqrt(s_rg.mean * s_rg.mean + s_yb.mean * s_yb.mean) +
         0.1586 * std::sqrt(s_rg.variance + s_yb.variance);
}

double uism(const torch::Tensor& image, const MetricsConfig& config) {
  config.validate();
  const auto rgb = to_planes(image);
  constexpr std::array<double, 3> kWeights = {0.299, 0.587, 0.114};
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto edges = product(sobel_magnitude(rgb[c]), rgb[c]);
    total += kWeights[c] * eme(edges, config.block_size);
  }
  return total;
}

double uiconm(const torch::Tensor& image, const MetricsConfig& config) {
  config.validate();
  const auto rgb = to_planes(image);
  const int block = config.block_size;
  const int64_t k1 = rgb[0].w / block;
  const int64_t k2 = rgb[0].h / block;
  if (k1 == 0 || k2 == 0) return 0.0;
  double sum = 0.0;
  for (int64_t by = 0; by < k2; ++by) {
    for (int64_t bx = 0; bx < k1; ++bx) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& p : rgb) {
        for (int64_t y = by * block; y < (by + 1) * block; ++y) {
          for (int64_t x = bx * block; x < (bx + 1) * block; ++x) {
            lo = std::min(lo, p.at(y, x));
            hi = std::max(hi, p.at(y, x));
          }
        }
      }
      const double top = hi - lo;
      const double bot = hi + lo;
      if (top > 0.0 && bot > 0.0) {
        const double r = top / bot;
        sum += r * std::log(r);
      }
    }
  }
  return -sum / static_cast<double>(k1 * k2);
}

double combine_uiqm(double uicm_value, double uism_value, double uiconm_value,
                    const MetricsConfig& config) {
  return config.c1 * uicm_value + config.c2 * uism_value + config.c3 * uiconm_value;
}

UiqmScores uiqm(const torch::Tensor& image, const MetricsConfig& config) {
  UiqmScores s;
  s.uicm = uicm(image, config);
  s.uism = uism(image, config);
  s.uiconm = uiconm(image, config);
  s.uiqm = combine_uiqm(s.uicm, s.uism, s.uiconm, config);
  return s;
}

ImageMetrics evaluate_image(const std::string& name, const torch::Tensor& image,
                            const torch::Tensor& reference, const MetricsConfig& config) {
  ImageMetrics m;
  m.name = name;
  if (reference.defined()) {
    const auto e = mse_psnr(image, reference);
    m.mse = e.mse;
    m.psnr = e.psnr;
    m.ssim = ssim(image, reference, config);
  }
  m.quality = uiqm(image, config);
  return m;
}

ImageMetrics MetricsReport::aggregate() const {
  ImageMetrics agg;
  agg.name = "mean";
  if (images.empty()) return agg;
  const auto n = static_cast<double>(images.size());
  const auto mean_of = [&](auto getter) -> std::optional<double> {
    double s = 0.0;
    for (const auto& m : images) {
      const std::optional<double> v = getter(m);
      if (!v) return std::nullopt;
      s += *v;
    }
    return s / n;
  };
  agg.mse = mean_of([](const ImageMetrics& m) { return m.mse; });
  agg.psnr = mean_of([](const ImageMetrics& m) { return m.psnr; });
  agg.ssim = mean_of([](const ImageMetrics& m) { return m.ssim; });
  agg.quality.uicm = *mean_of([](const ImageMetrics& m) { return std::optional(m.quality.uicm); });
  agg.quality.uism = *mean_of([](const ImageMetrics& m) { return std::optional(m.quality.uism); });
  agg.quality.uiconm =
      *mean_of([](const ImageMetrics& m) { return std::optional(m.quality.uiconm); });
  agg.quality.uiqm = *mean_of([](const ImageMetrics& m) { return std::optional(m.quality.uiqm); });
  return agg;
}

nlohmann::json MetricsReport::to_json() const {
  const auto row = [](const ImageMetrics& m) {
    return nlohmann::json{{"name", m.name},
                          {"mse", num_json(m.mse)},
                          {"psnr", num_json(m.psnr)},
                          {"ssim", num_json(m.ssim)},
                          {"uicm", m.quality.uicm},
                          {"uism", m.quality.uism},
                          {"uiconm", m.quality.uiconm},
                          {"uiqm", m.quality.uiqm}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : images) rows.push_back(row(m));
  return {{"images", rows}, {"aggregate", row(aggregate())}};
}

std::string MetricsReport::to_table() const {
  std::ostringstream os;
  const auto line = [&os](const ImageMetrics& m) {
    os << std::left << std::setw(28) << m.name << std::right << std::setw(12) << fmt(m.mse)
       << std::setw(10) << fmt(m.psnr) << std::setw(9) << fmt(m.ssim) << std::setw(10)
       << fmt(m.quality.uism) << std::setw(10) << fmt(m.quality.uicm) << std::setw(10)
       << fmt(m.quality.uiconm) << std::setw(10) << fmt(m.quality.uiqm) << "\n";
  };
  os << std::left << std::setw(28) << "image" << std::right << std::setw(12) << "MSE"
     << std::setw(10) << "PSNR" << std::setw(9) << "SSIM" << std::setw(10) << "UISM"
     << std::setw(10) << "UICM" << std::setw(10) << "UIConM" << std::setw(10) << "UIQM"
     << "\n";
  for (const auto& m : images) line(m);
  line(aggregate());
  return os.str();
}

}  // namespace uwgan
