#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "uwgan/physics.hpp"

namespace uwgan {

/// A clear in-air image with its per-pixel depth (raw file units).
struct RgbdSample {
  torch::Tensor image;  // [3, H, W] in [0, 1]
  torch::Tensor depth;  // [H, W], >= 0
  std::string id;

  void validate() const;
};

/// One water-type row: value = base + span * rand() per channel.
struct WaterTypeSpec {
  char type_id = 'd';
  Rgb nrer_base{};
  Rgb nrer_span{};
  Rgb bg_base{};
  Rgb bg_span{};

  void validate() const;
};

/// Rows (b), (c), (d) of the reference parameter table.
WaterTypeSpec water_type(char type_id);
std::vector<WaterTypeSpec> standard_water_types();

/// Uniform draw on [0, 1).
using UniformSource = std::function<double()>;

/// mt19937_64 stream producing doubles on [0, 1) with 53 random bits.
class SeededUniform {
 public:
  explicit SeededUniform(uint64_t seed) : engine_(seed) {}
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Stable per-item stream seed from a run seed and an item id (FNV-1a mix).
uint64_t derive_seed(uint64_t seed, std::string_view id);

DegradationParams sample_params(const WaterTypeSpec& spec, const UniformSource& rand,
                                double depth_scale = 1.0);

/// Maps raw depth units to attenuation units: min(raw / max_raw, 1) * range.
struct DepthNormalization {
  double max_raw = 10000.0;
  double range = 3.0;
};

enum class Split { Train, Test };
std::string to_string(Split split);
Split split_from_string(const std::string& s);

struct SynthesisOptions {
  Split split = Split::Train;
  int64_t train_resolution = 256;
  std::optional<DepthNormalization> depth_normalization;  // nullopt: depth already normalized
  double depth_scale = 1.0;
};

struct QuadProvenance {
  std::string source_id;
  char type_id = 'd';
  DegradationParams params;
  uint64_t seed = 0;
};

/// Training record (y, x, t, B) plus how it was made.
struct SyntheticQuad {
  torch::Tensor underwater;    // y, unclipped
  torch::Tensor ground_truth;  // x
  TransmissionMap transmission;
  Rgb background{};
  QuadProvenance provenance;
  int64_t out_of_range = 0;  // y elements outside [0, 1] before export clipping
};

SyntheticQuad synthesize_quad(const RgbdSample& sample, const WaterTypeSpec& spec,
                              const UniformSource& rand, const SynthesisOptions& options = {},
                              uint64_t seed = 0);

/// max |degrade(x, t, B) - y| over the stored fields.
double quad_consistency_error(const SyntheticQuad& quad);

// ---------------------------------------------------------------------------
// Persistence

struct ManifestRecord {
  std::string id;
  Split split = Split::Train;
  std::string underwater_path;    // relative to the manifest directory
  std::string ground_truth_path;  // relative
  std::string physics_path;       // relative; float32 t and B blob
  int64_t height = 0;
  int64_t width = 0;
  int64_t out_of_range = 0;
  QuadProvenance provenance;
};

struct SkippedSource {
  std::string stem;
  std::string reason;
};

struct DatasetManifest {
  static constexpr const char* kFormat = "uwgan-manifest/1";

  uint64_t seed = 0;
  int64_t train_resolution = 256;
  std::vector<ManifestRecord> records;
  std::vector<SkippedSource> skipped;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);

  /// Atomic write (temp file then rename).
  void save(const std::filesystem::path& path) const;
  static DatasetManifest load(const std::filesystem::path& path);

  /// Ids unique and every referenced file present and decodable.
  void validate(const std::filesystem::path& root) const;

  std::vector<const ManifestRecord*> by_split(Split split) const;
};

/// Loaded training tensors; underwater/ground truth are the stored 8-bit images.
struct QuadTensors {
  std::string id;
  torch::Tensor underwater;    // [3, H, W]
  torch::Tensor ground_truth;  // [3, H, W]
  torch::Tensor transmission;  // [3, H, W]
  torch::Tensor background;    // [3]
};

void save_physics_blob(const std::filesystem::path& path, const TransmissionMap& t,
                       const Rgb& background);
std::pair<TransmissionMap, Rgb> load_physics_blob(const std::filesystem::path& path);

QuadTensors load_quad(const ManifestRecord& record, const std::filesystem::path& root);

struct BuildOptions {
  std::vector<WaterTypeSpec> specs = standard_water_types();
  std::vector<double> mixture;  // relative weights per spec; empty = uniform
  int64_t count = 0;            // total quads across all types
  uint64_t seed = 0;
  double test_fraction = 0.0;   // share of source scenes reserved for the test split
  int64_t train_resolution = 256;
  DepthNormalization depth_normalization;
  double depth_scale = 1.0;
};

/// Splits `count` by the mixture weights (largest remainder).
std::vector<int64_t> allocate_counts(int64_t count, const std::vector<double>& weights);

/// Source stems that have rgb/<stem>.png and depth/<stem>.{png,bin}.
std::vector<std::string> list_corpus(const std::filesystem::path& corpus);
RgbdSample load_rgbd(const std::filesystem::path& corpus, const std::string& stem);

/// Writes quads under `out_dir` and `out_dir/manifest.json`. Undecodable
/// sources are skipped and listed in the manifest. Throws IoError when the
/// corpus directory is missing, before anything is written.
DatasetManifest build_dataset(const std::filesystem::path& corpus,
                              const std::filesystem::path& out_dir, const BuildOptions& options);

// ---------------------------------------------------------------------------
// Real-image pool

struct RealPool {
  std::vector<torch::Tensor> images;
  std::vector<std::string> names;
  std::vector<std::string> warnings;
};

RealPool load_real_pool(const std::filesystem::path& dir,
                        std::optional<int64_t> resize_to = std::nullopt);

/// ValidationError when domain adaptation is on and the pool is empty.
void require_pool(const RealPool& pool, bool domain_adaptation);

}  // namespace uwgan
