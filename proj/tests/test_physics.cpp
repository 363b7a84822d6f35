#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "uwgan/errors.hpp"
#include "uwgan/physics.hpp"

using namespace uwgan;
using uwgan::testing::max_abs_diff;

namespace {

DegradationParams type_d() {
  DegradationParams p;
  p.nrer = {0.67, 0.73, 0.67};
  p.background = {0.15, 0.80, 0.70};
  return p;
}

TransmissionMap constant_t(double v, int64_t h = 4, int64_t w = 5) {
  return TransmissionMap(torch::full({3, h, w}, v));
}

}  // namespace

TEST(Transmission, ZeroDepthGivesUnitTransmission) {
  const auto t = compute_transmission(torch::zeros({6, 7}), type_d());
  EXPECT_TRUE(torch::allclose(t.values(), torch::ones({3, 6, 7})));
}

TEST(Transmission, UnitDepthEqualsNrer) {
  const auto t = compute_transmission(torch::ones({2, 2}), type_d());
  EXPECT_NEAR(t.values()[0][0][0].item<double>(), 0.67, 1e-7);
  EXPECT_NEAR(t.values()[1][1][1].item<double>(), 0.73, 1e-7);
  EXPECT_NEAR(t.values()[2][0][1].item<double>(), 0.67, 1e-7);
}

TEST(Transmission, DepthTwoMatchesScalarPower) {
  const auto t = compute_transmission(torch::full({3, 3}, 2.0), type_d());
  const Rgb nrer{0.67, 0.73, 0.67};
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(t.values()[c][1][2].item<double>(), std::pow(nrer[c], 2.0), 1e-6);
  }
  EXPECT_NEAR(t.values()[0][0][0].item<double>(), 0.4489, 1e-6);
  EXPECT_NEAR(t.values()[1][0][0].item<double>(), 0.5329, 1e-6);
}

TEST(Transmission, DepthScaleMultipliesExponent) {
  auto p = type_d();
  p.depth_scale = 0.5;
  const auto t = compute_transmission(torch::full({2, 2}, 4.0), p);
  EXPECT_NEAR(t.values()[1][0][0].item<double>(), 0.73 * 0.73, 1e-6);
}

TEST(Transmission, MonotoneInDepth) {
  const auto depth = torch::linspace(0, 5, 50).reshape({5, 10});
  const auto t = compute_transmission(depth, type_d()).values().reshape({3, 50});
  EXPECT_TRUE((t.slice(1, 1) <= t.slice(1, 0, 49)).all().item<bool>());
}

TEST(Transmission, RejectsNegativeDepthAndBadParams) {
  auto depth = torch::zeros({3, 3});
  depth[1][1] = -1.0;
  EXPECT_THROW(compute_transmission(depth, type_d()), ValidationError);
  auto p = type_d();
  p.nrer[0] = 1.2;
  EXPECT_THROW(compute_transmission(torch::zeros({2, 2}), p), ValidationError);
  auto nan_depth = torch::zeros({2, 2});
  nan_depth[0][0] = std::nan("");
  EXPECT_THROW(compute_transmission(nan_depth, type_d()), ValidationError);
}

TEST(Transmission, MapRejectsValuesOutsideUnitInterval) {
  EXPECT_THROW(TransmissionMap(torch::zeros({3, 2, 2})), ValidationError);
  EXPECT_THROW(TransmissionMap(torch::full({3, 2, 2}, 1.5)), ValidationError);
  EXPECT_THROW(TransmissionMap(torch::ones({2, 2})), ValidationError);
}

TEST(Degrade, ArithmeticExample) {
  const auto r = degrade(torch::full({3, 4, 5}, 0.5), constant_t(0.5), {0.8, 0.8, 0.8});
  EXPECT_NEAR(r.pixels.max().item<double>(), 0.65, 1e-7);
  EXPECT_NEAR(r.pixels.min().item<double>(), 0.65, 1e-7);
  EXPECT_EQ(r.out_of_range, 0);
}

TEST(Degrade, UnitTransmissionIsIdentity) {
  const auto j = torch::rand({3, 4, 5});
  EXPECT_EQ(max_abs_diff(degrade(j, constant_t(1.0), {0.3, 0.2, 0.1}).pixels, j), 0.0);
}

TEST(Degrade, TinyTransmissionApproachesBackground) {
  const auto r = degrade(torch::rand({3, 4, 5}), constant_t(1e-6), {0.3, 0.2, 0.1});
  EXPECT_NEAR(r.pixels[0].mean().item<double>(), 0.3, 1e-5);
  EXPECT_NEAR(r.pixels[2].mean().item<double>(), 0.1, 1e-5);
}

TEST(Degrade, ShapeMismatchRejected) {
  EXPECT_THROW(degrade(torch::rand({3, 4, 4}), constant_t(0.5), {0, 0, 0}), ValidationError);
}

TEST(Regenerate, ZeroImageYieldsScaledBackground) {
  const auto y = regenerate(torch::zeros({3, 4, 5}), constant_t(0.5), {0.15, 0.80, 0.70});
  EXPECT_NEAR(y[0][0][0].item<double>(), 0.075, 1e-7);
  EXPECT_NEAR(y[1][0][0].item<double>(), 0.40, 1e-7);
  EXPECT_NEAR(y[2][0][0].item<double>(), 0.35, 1e-7);
}

TEST(Regenerate, GroundTruthReproducesDegradedImage) {
  const auto x = torch::rand({3, 6, 6});
  const auto t = compute_transmission(torch::rand({6, 6}) * 3, type_d());
  const auto y = degrade(x, t, type_d().background).pixels;
  EXPECT_LT(max_abs_diff(regenerate(x, t, type_d().background), y), 1e-6);
}

TEST(Regenerate, BatchedTensorFormIsDifferentiable) {
  auto g = torch::rand({2, 3, 4, 4}, torch::requires_grad());
  const auto t = torch::full({2, 3, 4, 4}, 0.25);
  const auto b = torch::rand({2, 3, 1, 1});
  regenerate(g, t, b).sum().backward();
  EXPECT_TRUE(torch::allclose(g.grad(), torch::full({2, 3, 4, 4}, 0.25)));
}

TEST(Invert, ArithmeticExampleAndFixedPoint) {
  const auto j = invert_physics(torch::full({3, 4, 5}, 0.65), constant_t(0.5), {0.8, 0.8, 0.8});
  EXPECT_NEAR(j.mean().item<double>(), 0.5, 1e-6);
  const Rgb b{0.2, 0.5, 0.9};
  const auto i = torch::stack({torch::full({4, 5}, 0.2), torch::full({4, 5}, 0.5),
                               torch::full({4, 5}, 0.9)});
  EXPECT_LT(max_abs_diff(invert_physics(i, constant_t(0.3), b), i), 1e-6);
}

TEST(Invert, BelowFloorIsSingular) {
  EXPECT_THROW(invert_physics(torch::rand({3, 4, 5}), constant_t(1e-5), {0, 0, 0}),
               SingularityError);
}

TEST(Invert, RoundTripRandomTriples) {
  torch::manual_seed(3);
  for (int k = 0; k < 50; ++k) {
    const auto j = torch::rand({3, 8, 8}, torch::kFloat64);
    const auto t = TransmissionMap(torch::rand({3, 8, 8}, torch::kFloat64) * 0.95 + 0.05);
    const Rgb b{torch::rand({1}).item<double>(), torch::rand({1}).item<double>(),
                torch::rand({1}).item<double>()};
    const auto i = degrade(j, t, b).pixels;
    ASSERT_LT(max_abs_diff(invert_physics(i, t, b), j), 1e-5);
  }
}

TEST(Composition, TwoLayersEqualOneWithProductTransmission) {
  // Passing through two slabs of the same water with the same background
  // equals one slab whose transmission is the product.
  const auto j = torch::rand({3, 5, 5}, torch::kFloat64);
  const auto t1 = TransmissionMap(torch::full({3, 5, 5}, 0.6, torch::kFloat64));
  const auto t2 = TransmissionMap(torch::full({3, 5, 5}, 0.7, torch::kFloat64));
  const Rgb b{0.1, 0.6, 0.7};
  const auto twice = degrade(degrade(j, t1, b).pixels, t2, b).pixels;
  const auto once =
      degrade(j, TransmissionMap(t1.values() * t2.values()), b).pixels;
  EXPECT_LT(max_abs_diff(twice, once), 1e-12);
}

TEST(Export, ClipsAndCounts) {
  auto img = torch::full({3, 2, 2}, 0.5);
  img[0][0][0] = -0.2;
  img[1][1][1] = 1.3;
  EXPECT_EQ(count_out_of_range(img), 2);
  const auto c = clip_for_export(img);
  EXPECT_EQ(c.min().item<float>(), 0.0f);
  EXPECT_EQ(c.max().item<float>(), 1.0f);
}
