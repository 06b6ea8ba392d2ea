#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "vsr/losses.hpp"

using namespace vsr;
using vsrtest::bit_equal;

namespace {

FeatureNetSpec tiny_feat() {
  FeatureNetSpec spec;
  spec.channels = {4, 4};
  spec.pool_after = {1};
  spec.taps = {1, 2};
  spec.seed = 7;
  return spec;
}

std::int64_t tapped_numel(const FeatureNet& fn, const Tensor& img) {
  std::int64_t n = 0;
  for (const Tensor& t : fn.forward(img)) n += t.numel();
  return n;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("mse values and gradient") {
  Tensor x = Tensor::from_values({2}, {0.0, 0.0});
  Tensor xhat = Tensor::from_values({2}, {1.0, 3.0});

  LossGrad sum = mse_loss(x, xhat, Reduction::kSum);
  CHECK(sum.loss == 10.0);
  CHECK(sum.grad[0] == 2.0);
  CHECK(sum.grad[1] == 6.0);

  LossGrad mean = mse_loss(x, xhat, Reduction::kMean);
  CHECK(mean.loss == 5.0);
  CHECK(mean.grad[0] == 1.0);
  CHECK(mean.grad[1] == 3.0);

  LossGrad zero = mse_loss(x, x);
  CHECK(zero.loss == 0.0);
  CHECK(zero.grad[0] == 0.0);

  CHECK_THROWS_AS(mse_loss(x, Tensor({3})), ShapeError);
}

TEST_CASE("charbonnier zero-difference floor") {
  Tensor x = Tensor::full({2, 2}, 0.3);
  LossGrad lg = charbonnier(x, x, 0.001);
  // sum of sqrt(0 + eps^2) over 4 elements
  CHECK(lg.loss == doctest::Approx(0.004).epsilon(1e-15));
  for (std::int64_t i = 0; i < 4; ++i) CHECK(lg.grad[i] == 0.0);
}

TEST_CASE("charbonnier single-element value and gradient") {
  Tensor x = Tensor::from_values({1}, {0.0});
  Tensor xhat = Tensor::from_values({1}, {3.0});
  LossGrad lg = charbonnier(xhat, x, 0.001);
  CHECK(lg.loss == doctest::Approx(std::sqrt(9.0 + 1e-6)).epsilon(1e-15));
  CHECK(lg.grad[0] == doctest::Approx(3.0 / std::sqrt(9.0 + 1e-6)).epsilon(1e-15));
}

TEST_CASE("charbonnier brackets the l1 distance") {
  Rng rng(19);
  Tensor x = randn({3, 5}, rng);
  Tensor xhat = randn({3, 5}, rng);
  const double eps = 0.001;
  double l1 = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) l1 += std::fabs(xhat[i] - x[i]);

  LossGrad lg = charbonnier(xhat, x, eps);
  CHECK(lg.loss >= l1);
  CHECK(lg.loss - l1 < x.numel() * eps);
  CHECK(lg.loss > x.numel() * eps);  // strict: xhat != x

  // eps -> 0 recovers l1
  LossGrad tight = charbonnier(xhat, x, 1e-8);
  CHECK(std::fabs(tight.loss - l1) < x.numel() * 1e-6);
}

TEST_CASE("feature charbonnier floor and frozen weights") {
  FeatureNet fn(tiny_feat());
  Rng rng(20);
  Tensor x = randn({1, 1, 12, 12}, rng, 0.2);
  const double eps = 0.001;

  LossGrad same = feature_charbonnier(x, x, fn, eps);
  const double floor = static_cast<double>(tapped_numel(fn, x)) * eps;
  CHECK(same.loss == doctest::Approx(floor).epsilon(1e-12));
  for (std::int64_t i = 0; i < same.grad.numel(); ++i) CHECK(same.grad[i] == 0.0);

  Tensor xhat = randn({1, 1, 12, 12}, rng, 0.2);
  LossGrad diff = feature_charbonnier(xhat, x, fn, eps);
  CHECK(diff.loss > floor);
  CHECK(diff.grad.shape() == xhat.shape());

  // the feature net is a frozen oracle: its gradient buffers stay zero
  for (const Parameter* p : static_cast<const FeatureNet&>(fn).params())
    for (std::int64_t i = 0; i < p->grad.numel(); ++i) CHECK(p->grad[i] == 0.0);
}

TEST_CASE("feature charbonnier is additive over duplicated samples") {
  FeatureNet fn(tiny_feat());
  Rng rng(21);
  Tensor x1 = randn({1, 1, 12, 12}, rng, 0.2);
  Tensor y1 = randn({1, 1, 12, 12}, rng, 0.2);

  Tensor x2({2, 1, 12, 12}), y2({2, 1, 12, 12});
  for (int b = 0; b < 2; ++b)
    for (std::int64_t i = 0; i < x1.numel(); ++i) {
      x2[b * x1.numel() + i] = x1[i];
      y2[b * y1.numel() + i] = y1[i];
    }
  const double single = feature_charbonnier(y1, x1, fn, 0.001).loss;
  const double doubled = feature_charbonnier(y2, x2, fn, 0.001).loss;
  CHECK(doubled == doctest::Approx(2.0 * single).epsilon(1e-12));
}

TEST_CASE("gan losses at the uninformative point") {
  Tensor half = Tensor::full({4, 1}, 0.5);
  GanLossResult r = gan_losses(half, half, GanMode::kMinimax);
  CHECK(std::fabs(r.loss_d - 2.0 * std::log(2.0)) < 1e-12);
  CHECK(r.loss_g == doctest::Approx(std::log(0.5)).epsilon(1e-14));

  GanLossResult n = gan_losses(half, half, GanMode::kNonsaturating);
  CHECK(n.loss_d == r.loss_d);
  CHECK(n.loss_g == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // both generator modes push d_fake upward (negative gradient of L_G)
  CHECK(r.grad_d_fake_g[0] < 0.0);
  CHECK(n.grad_d_fake_g[0] < 0.0);
}

TEST_CASE("gan losses at perfect discrimination stay finite") {
  Tensor real = Tensor::full({2, 1}, 1.0);
  Tensor fake = Tensor::full({2, 1}, 0.0);
  GanLossResult r = gan_losses(real, fake, GanMode::kMinimax);
  CHECK(std::isfinite(r.loss_d));
  CHECK(r.loss_d >= 0.0);
  CHECK(r.loss_d < 1e-9);  // clamp floor bounds it near zero

  CHECK_THROWS_AS(gan_losses(Tensor::full({2, 1}, 1.5), fake, GanMode::kMinimax),
                  NumericError);
  CHECK_THROWS_AS(gan_losses(real, Tensor::full({2, 1}, -0.1), GanMode::kMinimax),
                  NumericError);
}

TEST_CASE("loss weights validation") {
  LossWeights w;
  w.validate(true);  // defaults are a valid full-GAN configuration

  w.alpha = -0.1;
  CHECK_THROWS_AS(w.validate(false), ConfigError);
  w = LossWeights{};
  w.alpha = 0.6;
  w.beta = 0.4;  // alpha + beta must stay < 1
  CHECK_THROWS_AS(w.validate(false), ConfigError);
  w = LossWeights{};
  w.epsilon = 0.0;
  CHECK_THROWS_AS(w.validate(false), ConfigError);

  w = LossWeights{};
  w.beta = 0.0;
  w.validate(false);                              // degenerate harness is fine
  CHECK_THROWS_AS(w.validate(true), ConfigError);  // but not a full GAN
}

TEST_CASE("total loss with zero weights is exactly pixel charbonnier") {
  Rng rng(22);
  Tensor x = randn({2, 1, 12, 12}, rng, 0.2);
  Tensor xhat = randn({2, 1, 12, 12}, rng, 0.2);
  LossWeights w;
  w.alpha = 0.0;
  w.beta = 0.0;

  LossGrad total = total_loss_at(xhat, x, nullptr, nullptr, w, PixelLossKind::kCharbonnier,
                                 GanMode::kMinimax);
  LossGrad pix = charbonnier(xhat, x, w.epsilon);
  CHECK(total.loss == pix.loss);
  CHECK(bit_equal(total.grad, pix.grad));
}

TEST_CASE("total loss decomposes into its weighted parts") {
  Rng rng(23);
  Tensor x = randn({2, 1, 12, 12}, rng, 0.2);
  Tensor xhat = randn({2, 1, 12, 12}, rng, 0.2);

  DiscriminatorConfig dc;
  dc.conv_channels = {4, 8};
  dc.input_size = 12;
  Discriminator d(dc, 31);
  FeatureNet fn(tiny_feat());

  LossWeights w;
  w.alpha = 0.25;
  w.beta = 0.05;

  TotalLossParts parts;
  LossGrad total = total_loss_at(xhat, x, &d, &fn, w, PixelLossKind::kCharbonnier,
                                 GanMode::kMinimax, &parts);
  const double recon =
      w.alpha * parts.feature + w.beta * parts.adversarial + (1.0 - w.alpha - w.beta) * parts.pixel;
  CHECK(total.loss == doctest::Approx(parts.total).epsilon(1e-15));
  CHECK(total.loss == doctest::Approx(recon).epsilon(1e-12));
  CHECK(parts.pixel == doctest::Approx(charbonnier(xhat, x, w.epsilon).loss).epsilon(1e-15));
  CHECK(parts.feature ==
        doctest::Approx(feature_charbonnier(xhat, x, fn, w.epsilon).loss).epsilon(1e-12));
}

TEST_CASE("half-and-half weights compose the two zero-difference floors") {
  Rng rng(24);
  Tensor x = randn({1, 1, 12, 12}, rng, 0.2);
  FeatureNet fn(tiny_feat());
  LossWeights w;
  w.alpha = 0.5;
  w.beta = 0.0;

  LossGrad lg = total_loss_at(x, x, nullptr, &fn, w, PixelLossKind::kCharbonnier,
                              GanMode::kMinimax);
  const double want = 0.5 * static_cast<double>(tapped_numel(fn, x)) * w.epsilon +
                      0.5 * static_cast<double>(x.numel()) * w.epsilon;
  CHECK(lg.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("l2 mode swaps the pixel distance for summed squares") {
  Rng rng(25);
  Tensor x = randn({1, 1, 12, 12}, rng, 0.2);
  Tensor xhat = randn({1, 1, 12, 12}, rng, 0.2);
  LossWeights w;
  w.alpha = 0.0;
  w.beta = 0.0;

  LossGrad lg = total_loss_at(xhat, x, nullptr, nullptr, w, PixelLossKind::kL2,
                              GanMode::kMinimax);
  double want = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) want += (xhat[i] - x[i]) * (xhat[i] - x[i]);
  CHECK(lg.loss == doctest::Approx(want).epsilon(1e-14));
  for (std::int64_t i = 0; i < x.numel(); ++i)
    CHECK(lg.grad[i] == doctest::Approx(2.0 * (xhat[i] - x[i])).epsilon(1e-14));
}

TEST_CASE("total_loss wrapper equals manual forward plus total_loss_at") {
  GeneratorConfig gc;
  gc.base_channels = 8;
  gc.num_res_blocks = 1;
  gc.patch_size = 12;
  Generator g(gc, 41);

  DiscriminatorConfig dc;
  dc.conv_channels = {4, 8};
  dc.input_size = 12;
  Discriminator d(dc, 42);
  FeatureNet fn(tiny_feat());

  Rng rng(26);
  Tensor y = randn({1, 5, 1, 12, 12}, rng, 0.2);
  Tensor x = randn({1, 1, 12, 12}, rng, 0.2);
  LossWeights w;
  w.alpha = 0.25;
  w.beta = 0.05;

  LossGrad via_wrapper = total_loss(x, y, g, d, fn, w);
  Tensor xhat = g.forward(y);
  LossGrad manual = total_loss_at(xhat, x, &d, &fn, w, PixelLossKind::kCharbonnier,
                                  GanMode::kMinimax);
  CHECK(via_wrapper.loss == manual.loss);
  CHECK(bit_equal(via_wrapper.grad, manual.grad));
}

}  // TEST_SUITE
