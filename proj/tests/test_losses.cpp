#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "uwgan/errors.hpp"
#include "uwgan/losses.hpp"

using namespace uwgan;

namespace {

// Covariance of the rows of an [n, d] matrix by explicit loops.
std::vector<std::vector<double>> covariance_oracle(const torch::Tensor& rows) {
  const auto a = rows.to(torch::kFloat64).contiguous();
  const int64_t n = a.size(0), d = a.size(1);
  std::vector<double> mean(d, 0.0);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j) mean[j] += a[i][j].item<double>() / n;
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (int64_t i = 0; i < n; ++i)
    for (int64_t p = 0; p < d; ++p)
      for (int64_t q = 0; q < d; ++q)
        c[p][q] += (a[i][p].item<double>() - mean[p]) * (a[i][q].item<double>() - mean[q]) / (n - 1);
  return c;
}

double coral_oracle(const torch::Tensor& s, const torch::Tensor& t) {
  const auto cs = covariance_oracle(s);
  const auto ct = covariance_oracle(t);
  const double d = static_cast<double>(cs.size());
  double fro = 0.0;
  for (size_t p = 0; p < cs.size(); ++p)
    for (size_t q = 0; q < cs.size(); ++q) fro += std::pow(cs[p][q] - ct[p][q], 2);
  return fro / (4 * d * d);
}

double bce_oracle(const torch::Tensor& logits, bool real) {
  const auto flat = logits.to(torch::kFloat64).reshape({-1});
  double sum = 0.0;
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double z = flat[i].item<double>();
    const double p = 1.0 / (1.0 + std::exp(-z));
    sum += real ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / flat.numel();
}

// [d, h, w] features whose descriptors are the given rows.
torch::Tensor as_features(const torch::Tensor& rows) {
  return rows.t().reshape({rows.size(1), 1, rows.size(0)});
}

}  // namespace

TEST(PixelLoss, ZeroAtFixedPoint) {
  const auto x = torch::rand({1, 3, 8, 8});
  const auto y = torch::rand({1, 3, 8, 8});
  const auto p = pixel_losses(x, x, y, y);
  EXPECT_EQ(p.l_pixel.item<float>(), 0.0f);
}

TEST(PixelLoss, ClosedFormOffsetAndSymmetry) {
  const auto x = torch::rand({1, 3, 8, 8}, torch::kFloat64);
  const auto y = torch::rand({1, 3, 8, 8}, torch::kFloat64);
  const auto a = pixel_losses(x + 0.1, x, y, y);
  EXPECT_NEAR(a.l_pixel.item<double>(), 0.05, 1e-12);
  const auto b = pixel_losses(x, x, y + 0.1, y);
  EXPECT_NEAR(b.l_pixel.item<double>(), a.l_pixel.item<double>(), 1e-12);
}

TEST(PixelLoss, PixelIsExactMeanOfComponents) {
  const auto p = pixel_losses(torch::rand({1, 3, 9, 7}), torch::rand({1, 3, 9, 7}),
                              torch::rand({1, 3, 9, 7}), torch::rand({1, 3, 9, 7}));
  EXPECT_EQ(p.l_pixel.item<float>(), ((p.l_g + p.l_m) / 2).item<float>());
}

TEST(PixelLoss, WithoutFeedbackEqualsGeneratorTerm) {
  const auto p = pixel_losses(torch::rand({1, 3, 4, 4}), torch::rand({1, 3, 4, 4}));
  EXPECT_FALSE(p.l_m.defined());
  EXPECT_EQ(p.l_pixel.item<float>(), p.l_g.item<float>());
}

TEST(CycleLoss, ZeroAndOffset) {
  const auto x = torch::rand({1, 3, 6, 6}, torch::kFloat64);
  EXPECT_EQ(cycle_loss(x, x).item<double>(), 0.0);
  EXPECT_NEAR(cycle_loss(x + 0.2, x).item<double>(), 0.2, 1e-12);
  EXPECT_GE(cycle_loss(torch::rand({1, 3, 6, 6}), x.to(torch::kFloat32)).item<float>(), 0.0f);
}

TEST(Adversarial, ZeroLogitsGiveLn2) {
  const auto z = torch::zeros({1, 1, 4, 4});
  const auto a = adversarial_losses(z, z, z, z);
  EXPECT_NEAR(patch_loss(z, true).item<double>(), std::log(2.0), 1e-6);
  EXPECT_NEAR(a.d_g.item<double>(), 2 * std::log(2.0), 1e-6);
  EXPECT_NEAR(a.d_p.item<double>(), 2 * std::log(2.0), 1e-6);
  EXPECT_NEAR(a.generator.item<double>(), 2 * std::log(2.0), 1e-6);
}

TEST(Adversarial, PerfectDiscriminatorAsymptote) {
  const auto hi = torch::full({1, 1, 4, 4}, 30.0);
  const auto lo = torch::full({1, 1, 4, 4}, -30.0);
  const auto a = adversarial_losses(hi, lo, hi, lo);
  EXPECT_LT(a.d_g.item<double>(), 1e-6);
  EXPECT_LT(a.d_p.item<double>(), 1e-6);
  EXPECT_GT(a.generator.item<double>(), 50.0);
}

TEST(Adversarial, MatchesPerPatchLoop) {
  torch::manual_seed(4);
  const auto real = torch::randn({2, 1, 5, 6}, torch::kFloat64) * 3;
  const auto fake = torch::randn({2, 1, 5, 6}, torch::kFloat64) * 3;
  EXPECT_NEAR(patch_loss(real, true).item<double>(), bce_oracle(real, true), 1e-9);
  EXPECT_NEAR(patch_loss(fake, false).item<double>(), bce_oracle(fake, false), 1e-9);
  const auto a = adversarial_losses(real, fake, {}, {});
  EXPECT_NEAR(a.d_g.item<double>(), bce_oracle(real, true) + bce_oracle(fake, false), 1e-9);
  EXPECT_FALSE(a.d_p.defined());
  EXPECT_NEAR(a.generator.item<double>(), bce_oracle(fake, true), 1e-9);
}

TEST(Adversarial, NonFiniteLogitsDiverge) {
  auto bad = torch::zeros({1, 1, 2, 2});
  bad[0][0][1][1] = std::nan("");
  EXPECT_THROW(adversarial_losses(bad, torch::zeros({1, 1, 2, 2}), {}, {}), DivergenceError);
}

TEST(Coral, CovarianceMatchesLoopOracle) {
  const auto rows = torch::randn({13, 4}, torch::kFloat64);
  const auto c = feature_covariance(rows);
  const auto o = covariance_oracle(rows);
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q) EXPECT_NEAR(c[p][q].item<double>(), o[p][q], 1e-12);
}

TEST(Coral, ZeroForIdenticalAndPermuted) {
  const auto f = torch::randn({1, 6, 5, 5}, torch::kFloat64);
  EXPECT_NEAR(coral_loss(f, f).item<double>(), 0.0, 1e-15);
  const auto rows = as_descriptors(f);
  const auto perm = torch::randperm(rows.size(0));
  const auto shuffled = as_features(rows.index_select(0, perm));
  EXPECT_NEAR(coral_loss(f, shuffled).item<double>(), 0.0, 1e-12);
}

TEST(Coral, SmallTwoChannelCase) {
  const auto s = torch::tensor({0.0, 0.0, 1.0, 1.0}, torch::kFloat64).reshape({2, 2});
  const auto t = torch::tensor({0.0, 0.0, 1.0, -1.0}, torch::kFloat64).reshape({2, 2});
  const auto cs = covariance_oracle(s);
  EXPECT_DOUBLE_EQ(cs[0][1], 0.5);
  const auto ct = covariance_oracle(t);
  EXPECT_DOUBLE_EQ(ct[0][1], -0.5);
  // Difference is [[0, 1], [1, 0]]: squared norm 2 over 4 * 2^2.
  const double expected = coral_oracle(s, t);
  EXPECT_DOUBLE_EQ(expected, 0.125);
  EXPECT_NEAR(coral_loss(as_features(s), as_features(t)).item<double>(), expected, 1e-12);
}

TEST(Coral, MatchesOracleOnRandomFeatures) {
  const auto s = torch::randn({1, 5, 4, 3}, torch::kFloat64);
  const auto t = torch::randn({1, 5, 6, 2}, torch::kFloat64) * 2;
  EXPECT_NEAR(coral_loss(s, t).item<double>(), coral_oracle(as_descriptors(s), as_descriptors(t)),
              1e-12);
}

TEST(Coral, GradientMatchesCentralDifferences) {
  auto s = torch::randn({1, 3, 4, 4}, torch::kFloat64).requires_grad_();
  const auto t = torch::randn({1, 3, 4, 4}, torch::kFloat64);
  coral_loss(s, t).backward();
  const auto grad = s.grad().reshape({-1});
  auto flat = s.data().reshape({-1});
  const double h = 1e-5;
  double max_rel = 0.0;
  torch::NoGradGuard no_grad;
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = flat[i].item<double>();
    flat[i] = orig + h;
    const double up = coral_loss(s, t).item<double>();
    flat[i] = orig - h;
    const double down = coral_loss(s, t).item<double>();
    flat[i] = orig;
    const double numeric = (up - down) / (2 * h);
    const double analytic = grad[i].item<double>();
    max_rel = std::max(max_rel, std::abs(analytic - numeric) /
                                    std::max(1e-8, std::max(std::abs(analytic), std::abs(numeric))));
  }
  EXPECT_LT(max_rel, 1e-4);
}

TEST(Coral, RejectsTooFewDescriptorsAndChannelMismatch) {
  EXPECT_THROW(coral_loss(torch::rand({2, 1, 1}), torch::rand({2, 3, 3})), ValidationError);
  EXPECT_THROW(coral_loss(torch::rand({2, 3, 3}), torch::rand({3, 3, 3})), ValidationError);
}

TEST(TotalLoss, WeightsCombineLinearly) {
  const auto one = torch::ones({});
  LossTerms terms{one, one, one, one, one, one};
  EXPECT_DOUBLE_EQ(total_loss(terms, {0, 0, 0}).breakdown.total, 1.0);
  EXPECT_DOUBLE_EQ(total_loss(terms, {1, 1, 1}).breakdown.total, 4.0);

  LossTerms random{torch::rand({}), torch::rand({}), torch::rand({}), torch::rand({}),
                   torch::rand({}), torch::rand({})};
  const auto base = total_loss(random, {10, 10, 1});
  const auto doubled = total_loss(random, {10, 20, 1});
  EXPECT_NEAR(doubled.breakdown.total - base.breakdown.total, 10 * *base.breakdown.l_pixel, 1e-6);
  const auto& b = base.breakdown;
  EXPECT_NEAR(b.total, *b.l_a + 10 * *b.l_cycle + 10 * *b.l_pixel + *b.l_coral, 1e-12);
  EXPECT_NEAR(base.total.item<double>(), b.total, 1e-6);
}

TEST(TotalLoss, AbsentTermsAreNullInLog) {
  LossTerms terms;
  terms.l_a = torch::ones({});
  terms.l_g = torch::ones({});
  terms.l_pixel = torch::ones({});
  const auto w = total_loss(terms, {10, 10, 1});
  const auto j = w.breakdown.to_json();
  EXPECT_TRUE(j["l_coral"].is_null());
  EXPECT_TRUE(j["l_cycle"].is_null());
  EXPECT_DOUBLE_EQ(j["total"].get<double>(), 11.0);
}

TEST(TotalLoss, NonFiniteTermDiverges) {
  LossTerms terms;
  terms.l_a = torch::full({}, std::numeric_limits<double>::infinity());
  EXPECT_THROW(total_loss(terms, {}), DivergenceError);
}
