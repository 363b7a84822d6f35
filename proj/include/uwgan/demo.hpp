#pragma once

#include <cstdint>
#include <filesystem>

#include <torch/torch.h>

#include "uwgan/datasets.hpp"

namespace uwgan {

/// Procedural indoor-like scene: textured back wall and floor receding in
/// depth with a few nearer boxes. Depth is in millimetres.
RgbdSample make_demo_scene(int64_t height, int64_t width, uint64_t seed, const std::string& id);

/// Writes `count` scenes as rgb/<id>.png + depth/<id>.png (16-bit mm).
void write_demo_corpus(const std::filesystem::path& dir, int64_t count, int64_t height,
                       int64_t width, uint64_t seed);

/// Writes `count` unpaired underwater-looking photos: demo scenes degraded
/// with parameters outside the synthetic ranges plus sensor noise.
void write_demo_real_pool(const std::filesystem::path& dir, int64_t count, int64_t height,
                          int64_t width, uint64_t seed);

}  // namespace uwgan
