#include "uwgan/demo.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "uwgan/image_io.hpp"
#include "uwgan/physics.hpp"

namespace fs = std::filesystem;

namespace uwgan {

RgbdSample make_demo_scene(int64_t height, int64_t width, uint64_t seed, const std::string& id) {
  SeededUniform rng(seed);
  auto image = torch::empty({3, height, width}, torch::kFloat32);
  auto depth = torch::empty({height, width}, torch::kFloat32);
  auto img = image.accessor<float, 3>();
  auto dep = depth.accessor<float, 2>();

  const double horizon = 0.45 + 0.2 * rng();
  const double wall_depth = 5000.0 + 4000.0 * rng();
  std::array<double, 3> wall{0.4 + 0.5 * rng(), 0.4 + 0.5 * rng(), 0.4 + 0.5 * rng()};
  std::array<double, 3> floor{0.2 + 0.5 * rng(), 0.2 + 0.4 * rng(), 0.1 + 0.4 * rng()};
  const double freq = 6.0 + 20.0 * rng();

  for (int64_t y = 0; y < height; ++y) {
    const double v = static_cast<double>(y) / static_cast<double>(height);
    for (int64_t x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / static_cast<double>(width);
      double d;
      std::array<double, 3> c;
      if (v < horizon) {
        d = wall_depth;
        const double stripe = 0.5 + 0.5 * std::sin(2.0 * M_PI * freq * u);
        for (int k = 0; k < 3; ++k) c[k] = wall[k] * (0.8 + 0.2 * stripe);
      } else {
        const double s = (v - horizon) / (1.0 - horizon);
        d = wall_depth * (1.0 - s) + 600.0 * s;
        const bool tile = (static_cast<int>(u * 8) + static_cast<int>(s * 8)) % 2 == 0;
        for (int k = 0; k < 3; ++k) c[k] = floor[k] * (tile ? 1.0 : 0.7);
      }
      for (int k = 0; k < 3; ++k) img[k][y][x] = static_cast<float>(c[k]);
      dep[y][x] = static_cast<float>(d);
    }
  }

  const int boxes = 2 + static_cast<int>(rng() * 3);
  for (int b = 0; b < boxes; ++b) {
    const auto x0 = static_cast<int64_t>(rng() * 0.7 * static_cast<double>(width));
    const auto y0 = static_cast<int64_t>((0.2 + rng() * 0.5) * static_cast<double>(height));
    const auto bw = static_cast<int64_t>((0.1 + 0.2 * rng()) * static_cast<double>(width));
    const auto bh = static_cast<int64_t>((0.1 + 0.25 * rng()) * static_cast<double>(height));
    const double d = 800.0 + 3000.0 * rng();
    std::array<double, 3> c{rng(), rng(), rng()};
    for (int64_t y = y0; y < std::min(height, y0 + bh); ++y) {
      for (int64_t x = x0; x < std::min(width, x0 + bw); ++x) {
        const double shade = 0.75 + 0.25 * static_cast<double>(y - y0) / static_cast<double>(bh);
        for (int k = 0; k < 3; ++k) img[k][y][x] = static_cast<float>(c[k] * shade);
        dep[y][x] = static_cast<float>(d);
      }
    }
  }
  return RgbdSample{image.clamp(0.0, 1.0), depth, id};
}

void write_demo_corpus(const fs::path& dir, int64_t count, int64_t height, int64_t width,
                       uint64_t seed) {
  fs::create_directories(dir / "rgb");
  fs::create_directories(dir / "depth");
  for (int64_t i = 0; i < count; ++i) {
    std::ostringstream id;
    id << "scene_" << std::setw(4) << std::setfill('0') << i;
    const auto s = make_demo_scene(height, width, derive_seed(seed, id.str()), id.str());
    save_rgb_png(dir / "rgb" / (id.str() + ".png"), s.image);
    save_depth_png16(dir / "depth" / (id.str() + ".png"), s.depth);
  }
}

void write_demo_real_pool(const fs::path& dir, int64_t count, int64_t height, int64_t width,
                          uint64_t seed) {
  fs::create_directories(dir);
  for (int64_t i = 0; i < count; ++i) {
    std::ostringstream id;
    id << "real_" << std::setw(4) << std::setfill('0') << i;
    const uint64_t s = derive_seed(seed, id.str());
    SeededUniform rng(s);
    const auto scene = make_demo_scene(height, width, s, id.str());
    DegradationParams p;
    p.nrer = {0.55 + 0.2 * rng(), 0.75 + 0.2 * rng(), 0.8 + 0.15 * rng()};
    p.background = {0.02 + 0.1 * rng(), 0.35 + 0.4 * rng(), 0.45 + 0.45 * rng()};
    const auto depth = (scene.depth / 10000.0).clamp(0.0, 1.0) * 4.0;
    const auto t = compute_transmission(depth, p);
    auto image = degrade(scene.image, t, p.background).pixels;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(s);
    image = image + 0.01 * torch::randn(image.sizes(), gen, torch::kFloat32);
    save_rgb_png(dir / (id.str() + ".png"), image);
  }
}

}  // namespace uwgan
