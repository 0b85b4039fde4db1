#include <gtest/gtest.h>

#include <cmath>

#include "dpaf/nn/grad_check.hpp"
#include "dpaf/nn/serialize.hpp"
#include "dpaf/objective/losses.hpp"
#include "oracles.hpp"

using namespace dpaf;
using namespace dpaf::objective;
using dpaf::oracle::random_tensor;
using D = double;

namespace {

PerceptualConfig small_extractor() {
  PerceptualConfig c;
  c.widths = {4, 6};
  c.tap = 2;
  return c;
}

}  // namespace

TEST(Mse, ClosedFormsAndSymmetry) {
  const auto x = random_tensor({2, 3, 4, 4}, 1);
  EXPECT_EQ(mse_loss(x, x), 0.0);
  Tensor<D> y = x;
  for (auto& v : y.values()) v += 0.1;
  EXPECT_NEAR(mse_loss(x, y), 0.01, 1e-15);
  const auto z = random_tensor({2, 3, 4, 4}, 2);
  EXPECT_EQ(mse_loss(x, z), mse_loss(z, x));
  EXPECT_THROW(mse_loss(x, random_tensor({2, 3, 4, 5}, 1)), ShapeError);
}

TEST(Mse, MatchesLoopAndFiniteDifferences) {
  auto p = random_tensor({2, 3, 4, 4}, 3);
  const auto t = random_tensor({2, 3, 4, 4}, 4);
  double expected = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) expected += (p[i] - t[i]) * (p[i] - t[i]);
  Tensor<D> grad;
  EXPECT_NEAR(mse_loss(p, t, &grad), expected / p.size(), 1e-15);
  const std::function<D()> f = [&] { return mse_loss(p, t); };
  EXPECT_LT(nn::check_gradient<D>("pred", p, grad, f).rel_error, 1e-8);
}

TEST(Ssim, MatchesBruteForceWindows) {
  const SsimConfig cfg;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = random_tensor({1, 1, 16, 16}, 10 + s, 0, 1), y = random_tensor({1, 1, 16, 16}, 20 + s, 0, 1);
    const double oracle = oracle::brute_force_ssim_plane(x.data(), y.data(), 16, 16, 11, 1.5, 0.01, 0.03, 1.0);
    EXPECT_NEAR(ssim(x, y, cfg), oracle, 1e-8);
  }
}

TEST(Ssim, ColourImagesAverageThePlanes) {
  const auto x = random_tensor({2, 3, 12, 13}, 5, 0, 1), y = random_tensor({2, 3, 12, 13}, 6, 0, 1);
  double mean = 0.0;
  for (std::size_t p = 0; p < 6; ++p) {
    mean += oracle::brute_force_ssim_plane(x.data() + p * 156, y.data() + p * 156, 12, 13, 11, 1.5, 0.01, 0.03, 1.0);
  }
  EXPECT_NEAR(ssim(x, y), mean / 6.0, 1e-10);
}

TEST(Ssim, IdentitySymmetryAndRange) {
  const auto x = random_tensor({3, 16, 16}, 7, 0, 1), y = random_tensor({3, 16, 16}, 8, 0, 1);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-9);
  EXPECT_NEAR(ssim(x, y), ssim(y, x), 1e-15);
  Tensor<D> neg = x;
  for (auto& v : neg.values()) v = 1.0 - v;
  const double s = ssim(x, neg);
  EXPECT_GE(s, -1.0);
  EXPECT_LT(s, 0.0);
}

TEST(Ssim, CommonOffsetBarelyMatters) {
  // y is x plus a zero-mean checkerboard, so local means agree and the
  // luminance term is the only place a common offset can act.
  const auto x = random_tensor({1, 1, 24, 24}, 9, 0.2, 0.8);
  Tensor<D> y = x;
  for (std::size_t i = 0; i < 24; ++i)
    for (std::size_t j = 0; j < 24; ++j) y[i * 24 + j] += ((i + j) % 2 ? 0.05 : -0.05);
  Tensor<D> xs = x, ys = y;
  for (auto& v : xs.values()) v += 0.01;
  for (auto& v : ys.values()) v += 0.01;
  EXPECT_LT(std::abs(ssim(x, y) - ssim(xs, ys)), 1e-6);
}

TEST(Ssim, RejectsSmallImagesAndBadConfigs) {
  const auto x = random_tensor({1, 3, 10, 16}, 1);
  EXPECT_THROW(ssim(x, x), ParameterError);
  SsimConfig bad;
  bad.window = 4;
  EXPECT_THROW(bad.validate(), ConfigError);
  const auto g = gaussian_window(11, 1.5);
  double total = 0.0;
  for (double v : g) total += v;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_EQ(g[0], g[10]);
}

TEST(SsimLoss, ValueRangeAndGradient) {
  const SsimConfig cfg;
  auto p = random_tensor({1, 2, 12, 12}, 11, 0, 1);
  const auto t = random_tensor({1, 2, 12, 12}, 12, 0, 1);
  EXPECT_NEAR(ssim_loss<D>(t, t, cfg, nullptr), 0.0, 1e-9);
  Tensor<D> grad;
  const double l = ssim_loss(p, t, cfg, &grad);
  EXPECT_GE(l, 0.0);
  EXPECT_LE(l, 2.0);
  EXPECT_NEAR(l, 1.0 - ssim(p, t, cfg), 1e-15);
  const std::function<D()> f = [&] { return ssim_loss<D>(p, t, cfg, nullptr); };
  EXPECT_LT(nn::check_gradient<D>("pred", p, grad, f).rel_error, 1e-5);
}

TEST(Perceptual, SingleStageMatchesConvThenMse) {
  PerceptualConfig cfg;
  cfg.widths = {2};
  cfg.tap = 1;
  PerceptualExtractor<D> ex(cfg);
  const auto w = random_tensor({2, 3, 3, 3}, 13), b = random_tensor({2}, 14);
  nn::Container c;
  c.add_tensor("stage1.weight", w);
  c.add_tensor("stage1.bias", b);
  ex.load(c);
  const auto p = random_tensor({2, 3, 5, 6}, 15, 0, 1), t = random_tensor({2, 3, 5, 6}, 16, 0, 1);
  const auto fp = oracle::naive_conv2d(p, w, b, 1, 1), ft = oracle::naive_conv2d(t, w, b, 1, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const double d = std::max(fp[i], 0.0) - std::max(ft[i], 0.0);
    acc += d * d;
  }
  EXPECT_NEAR(ex.loss(p, t, nullptr), acc / (2 * 5 * 6), 1e-12);
}

TEST(Perceptual, NonNegativeDeterministicAndDifferentiable) {
  const PerceptualExtractor<D> a(small_extractor()), b(small_extractor());
  auto p = random_tensor({1, 3, 8, 8}, 17, 0, 1);
  const auto t = random_tensor({1, 3, 8, 8}, 18, 0, 1);
  EXPECT_EQ(a.loss(t, t, nullptr), 0.0);
  Tensor<D> grad;
  const double l = a.loss(p, t, &grad);
  EXPECT_GT(l, 0.0);
  EXPECT_EQ(l, b.loss(p, t, nullptr));
  const std::function<D()> f = [&] { return a.loss(p, t, nullptr); };
  EXPECT_LT(nn::check_gradient<D>("pred", p, grad, f).rel_error, 1e-5);
}

TEST(Perceptual, RejectsInputsTooSmallForTheTap) {
  const PerceptualExtractor<D> ex;  // tap 3: two pools before it
  const auto x = random_tensor({1, 3, 3, 8}, 1);
  EXPECT_THROW(ex.loss(x, x, nullptr), ParameterError);
}

TEST(CombinedLoss, SingleTermsAndLinearity) {
  const SsimConfig cfg;
  const PerceptualExtractor<D> ex(small_extractor());
  const auto p = random_tensor({1, 3, 12, 12}, 19, 0, 1), t = random_tensor({1, 3, 12, 12}, 20, 0, 1);
  Tensor<D> gm, gs, gp;
  const double mse = mse_loss(p, t, &gm);
  const double sl = ssim_loss(p, t, cfg, &gs);
  const double pl = ex.loss(p, t, &gp);
  EXPECT_NEAR(combined_loss(p, t, {1, 0, 0}, cfg, &ex).total, mse, 1e-12);
  EXPECT_NEAR(combined_loss(p, t, {0, 1, 0}, cfg, &ex).total, sl, 1e-12);
  EXPECT_NEAR(combined_loss(p, t, {0, 0, 1}, cfg, &ex).total, pl, 1e-12);
  EXPECT_NEAR(combined_loss(p, t, {1, 1, 1}, cfg, &ex).total, mse + sl + pl, 1e-12);
  const LossWeights w{0.7, 0.3, 0.05};
  Tensor<D> g;
  const auto parts = combined_loss(p, t, w, cfg, &ex, &g);
  EXPECT_NEAR(parts.total, 0.7 * mse + 0.3 * sl + 0.05 * pl, 1e-12);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], 0.7 * gm[i] + 0.3 * gs[i] + 0.05 * gp[i], 1e-14);
  EXPECT_NEAR(combined_loss(t, t, w, cfg, &ex).total, 0.0, 1e-9);
  EXPECT_EQ(combined_loss<D>(p, t, {1, 0, 0}, cfg, nullptr).perp, 0.0);
  EXPECT_THROW(combined_loss<D>(p, t, {1, 0, 1}, cfg, nullptr), ConfigError);
}

TEST(LossWeights, Validation) {
  EXPECT_NO_THROW(LossWeights{}.validate());
  EXPECT_THROW((LossWeights{0, 0, 0}.validate()), ConfigError);
  EXPECT_THROW((LossWeights{-1, 1, 0}.validate()), ConfigError);
}

TEST(Psnr, ClosedFormSentinelAndScaleInvariance) {
  const auto x = random_tensor({3, 8, 8}, 21, 0.2, 0.8);
  Tensor<D> y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += (i % 2 ? 0.1 : -0.1);
  EXPECT_NEAR(psnr(x, y), 20.0, 1e-9);
  EXPECT_EQ(psnr(x, x), kPsnrInfinity);
  EXPECT_TRUE(std::isinf(psnr(x, x)));
  Tensor<D> xs = x, ys = y;
  for (auto& v : xs.values()) v *= 255.0;
  for (auto& v : ys.values()) v *= 255.0;
  EXPECT_NEAR(psnr(xs, ys, 255.0), psnr(x, y), 1e-9);
  EXPECT_THROW(psnr(x, y, 0.0), ParameterError);
}
