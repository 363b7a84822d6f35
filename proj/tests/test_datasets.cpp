#include <fstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "uwgan/datasets.hpp"
#include "uwgan/demo.hpp"
#include "uwgan/errors.hpp"
#include "uwgan/image_io.hpp"

using namespace uwgan;
using uwgan::testing::max_abs_diff;
using uwgan::testing::read_file;
using uwgan::testing::TempDir;

namespace {

RgbdSample flat_sample(double depth, int64_t h = 8, int64_t w = 8) {
  return RgbdSample{torch::rand({3, h, w}), torch::full({h, w}, depth), "flat"};
}

SynthesisOptions native() {
  SynthesisOptions o;
  o.split = Split::Test;
  return o;
}

void write_garbage(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  out << "this is not an image";
}

}  // namespace

TEST(WaterTypes, TypeDHasFixedValues) {
  const auto spec = water_type('d');
  for (uint64_t seed : {0u, 7u, 99u}) {
    SeededUniform rand(seed);
    const auto p = sample_params(spec, std::ref(rand));
    EXPECT_EQ(p.nrer, (Rgb{0.67, 0.73, 0.67}));
    EXPECT_EQ(p.background, (Rgb{0.15, 0.80, 0.70}));
  }
}

TEST(WaterTypes, StubbedBounds) {
  const auto spec = water_type('b');
  const auto lo = sample_params(spec, [] { return 0.0; });
  const auto hi = sample_params(spec, [] { return 1.0; });
  for (int c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(lo.nrer[c], (Rgb{0.79, 0.92, 0.94})[c]);
    EXPECT_NEAR(hi.nrer[c], (Rgb{0.85, 0.98, 0.99})[c], 1e-12);
  }
  EXPECT_NEAR(hi.background[0], 0.20, 1e-12);
  EXPECT_NEAR(hi.background[1], 0.90, 1e-12);
  EXPECT_NEAR(hi.background[2], 0.99, 1e-12);
}

TEST(WaterTypes, DrawsStayInsideIntervals) {
  for (const auto& spec : standard_water_types()) {
    SeededUniform rand(derive_seed(11, std::string(1, spec.type_id)));
    for (int k = 0; k < 1000; ++k) {
      const auto p = sample_params(spec, std::ref(rand));
      for (int c = 0; c < 3; ++c) {
        ASSERT_GE(p.nrer[c], spec.nrer_base[c]);
        ASSERT_LE(p.nrer[c], spec.nrer_base[c] + spec.nrer_span[c]);
        ASSERT_GE(p.background[c], spec.bg_base[c]);
        ASSERT_LE(p.background[c], spec.bg_base[c] + spec.bg_span[c]);
      }
    }
  }
}

TEST(WaterTypes, UnknownTypeRejected) {
  EXPECT_THROW(water_type('z'), ValidationError);
}

TEST(Synthesis, ZeroDepthKeepsImage) {
  SeededUniform rand(1);
  const auto q = synthesize_quad(flat_sample(0.0), water_type('b'), std::ref(rand), native());
  EXPECT_LT(max_abs_diff(q.underwater, q.ground_truth), 1e-7);
}

TEST(Synthesis, TypeDUnitDepthBlendsPerChannel) {
  SeededUniform rand(1);
  const auto s = flat_sample(1.0);
  const auto q = synthesize_quad(s, water_type('d'), std::ref(rand), native());
  const Rgb t{0.67, 0.73, 0.67};
  const Rgb b{0.15, 0.80, 0.70};
  const auto x = quantize_8bit(s.image);
  for (int c = 0; c < 3; ++c) {
    const double xv = x[c][3][4].item<double>();
    EXPECT_NEAR(q.underwater[c][3][4].item<double>(), xv * t[c] + b[c] * (1 - t[c]), 1e-6);
  }
}

TEST(Synthesis, QuadIsSelfConsistent) {
  SeededUniform rand(5);
  const RgbdSample s{torch::rand({3, 20, 30}), torch::rand({20, 30}) * 4000, "s"};
  SynthesisOptions o;
  o.train_resolution = 16;
  o.depth_normalization = DepthNormalization{};
  const auto q = synthesize_quad(s, water_type('c'), std::ref(rand), o);
  EXPECT_EQ(q.underwater.sizes(), (std::vector<int64_t>{3, 16, 16}));
  EXPECT_LT(quad_consistency_error(q), 1e-5);
}

TEST(Allocation, LargestRemainder) {
  EXPECT_EQ(allocate_counts(12, {1, 1, 1}), (std::vector<int64_t>{4, 4, 4}));
  EXPECT_EQ(allocate_counts(10, {1, 1, 1}), (std::vector<int64_t>{4, 3, 3}));
  EXPECT_EQ(allocate_counts(7, {0.5, 0.25, 0.25}), (std::vector<int64_t>{3, 2, 2}));
}

class BuildDataset : public ::testing::Test {
 protected:
  void SetUp() override { write_demo_corpus(dir / "corpus", 5, 24, 32, 3); }

  BuildOptions options(int64_t count) const {
    BuildOptions o;
    o.count = count;
    o.seed = 42;
    o.train_resolution = 16;
    o.test_fraction = 0.2;
    return o;
  }

  TempDir dir{"ds"};
};

TEST_F(BuildDataset, ZeroCountWritesEmptyManifest) {
  const auto m = build_dataset(dir / "corpus", dir / "out", options(0));
  EXPECT_TRUE(m.records.empty());
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::recursive_directory_iterator(dir / "out")) {
    ++files;
  }
  EXPECT_EQ(files, 1);  // manifest.json only
}

TEST_F(BuildDataset, DeterministicAndConsistentOnDisk) {
  const auto m1 = build_dataset(dir / "corpus", dir / "a", options(12));
  build_dataset(dir / "corpus", dir / "b", options(12));
  EXPECT_EQ(m1.records.size(), 12u);
  EXPECT_EQ(read_file(dir / "a/manifest.json"), read_file(dir / "b/manifest.json"));
  for (const auto& r : m1.records) {
    EXPECT_EQ(read_file(dir / "a" / r.underwater_path), read_file(dir / "b" / r.underwater_path));
    const auto q = load_quad(r, dir / "a");
    const auto again = degrade(q.ground_truth, TransmissionMap(q.transmission),
                               {q.background[0].item<double>(), q.background[1].item<double>(),
                                q.background[2].item<double>()});
    EXPECT_LE(max_abs_diff(again.pixels, q.underwater), 2.0 / 255.0) << r.id;
  }
  m1.validate(dir / "a");
  EXPECT_FALSE(m1.by_split(Split::Test).empty());
  for (const auto* r : m1.by_split(Split::Train)) {
    EXPECT_EQ(r->height, 16);
  }
  for (const auto* r : m1.by_split(Split::Test)) {
    EXPECT_EQ(r->height, 24);
    EXPECT_EQ(r->width, 32);
  }
}

TEST_F(BuildDataset, ManifestRoundTripsThroughJson) {
  const auto m = build_dataset(dir / "corpus", dir / "a", options(6));
  const auto back = DatasetManifest::load(dir / "a/manifest.json");
  EXPECT_EQ(back.to_json(), m.to_json());
}

TEST_F(BuildDataset, CorruptSourceSkipped) {
  write_garbage(dir / "corpus/rgb/zz_bad.png");
  std::filesystem::copy_file(dir / "corpus/depth/scene_0000.png", dir / "corpus/depth/zz_bad.png");
  const auto m = build_dataset(dir / "corpus", dir / "out", options(6));
  ASSERT_EQ(m.skipped.size(), 1u);
  EXPECT_EQ(m.skipped[0].stem, "zz_bad");
  for (const auto& r : m.records) EXPECT_EQ(r.provenance.source_id.find("zz_bad"), std::string::npos);
}

TEST_F(BuildDataset, MissingCorpusWritesNothing) {
  EXPECT_THROW(build_dataset(dir / "nope", dir / "out", options(3)), IoError);
  EXPECT_FALSE(std::filesystem::exists(dir / "out/manifest.json"));
}

TEST(RealPool, LoadsValidAndWarnsOnCorrupt) {
  TempDir dir("pool");
  write_demo_real_pool(dir.path(), 4, 20, 20, 1);
  write_garbage(dir / "broken.png");
  const auto pool = load_real_pool(dir.path());
  EXPECT_EQ(pool.images.size(), 4u);
  EXPECT_EQ(pool.warnings.size(), 1u);
  for (const auto& img : pool.images) {
    EXPECT_GE(img.min().item<float>(), 0.0f);
    EXPECT_LE(img.max().item<float>(), 1.0f);
  }
}

TEST(RealPool, EmptyPoolOnlyAnErrorWithAdaptation) {
  TempDir dir("pool");
  const auto pool = load_real_pool(dir.path());
  EXPECT_TRUE(pool.images.empty());
  EXPECT_NO_THROW(require_pool(pool, false));
  EXPECT_THROW(require_pool(pool, true), ValidationError);
  EXPECT_THROW(load_real_pool(dir / "missing"), IoError);
}

TEST(ImageIo, DepthBlobRoundTrip) {
  TempDir dir("io");
  const auto d = torch::rand({5, 7}) * 100;
  save_depth_blob(dir / "d.bin", d);
  EXPECT_EQ(max_abs_diff(load_depth(dir / "d.bin"), d), 0.0);
  save_depth_png16(dir / "d.png", torch::round(d));
  EXPECT_EQ(max_abs_diff(load_depth(dir / "d.png"), torch::round(d)), 0.0);
}
