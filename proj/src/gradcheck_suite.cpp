#include "vsr/gradcheck_suite.hpp"

#include <cmath>

#include "vsr/gradcheck.hpp"
#include "vsr/kernels.hpp"
#include "vsr/losses.hpp"
#include "vsr/models.hpp"

namespace vsr {

namespace {

constexpr double kH = 1e-5;
constexpr double kTolLayer = 1e-6;
constexpr double kTolComposite = 1e-4;
// Composite checks divide by max(|analytic|, |numeric|, kFloor): central
// differences carry ~h^2 absolute noise, so coordinates far below the
// gradient's working scale (O(1e-2..1) in these fixtures) must not divide
// noise by noise.
constexpr double kFloor = 1e-4;

double dot(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "gradcheck dot");
  double s = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

// Keeps every coordinate at least `margin` away from zero so finite
// differences never straddle an activation kink.
Tensor away_from_zero(Tensor t, double margin) {
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] += t[i] >= 0.0 ? margin : -margin;
  return t;
}

void conv_rows(const std::string& prefix, int stride, std::vector<GradCheckRow>* rows) {
  Rng rng(101 + static_cast<std::uint64_t>(stride));
  const Tensor x = randn({2, 2, 6, 6}, rng, 1.0);
  const Tensor w = randn({3, 2, 3, 3}, rng, 0.5);
  const Tensor b = randn({3}, rng, 0.5);
  const Tensor probe = randn(conv2d_forward(x, w, b, stride, 1).shape(), rng, 1.0);
  const Conv2dGrads gr = conv2d_backward(probe, x, w, stride, 1);

  auto fx = [&](const Tensor& p) { return dot(conv2d_forward(p, w, b, stride, 1), probe); };
  auto fw = [&](const Tensor& p) { return dot(conv2d_forward(x, p, b, stride, 1), probe); };
  auto fb = [&](const Tensor& p) { return dot(conv2d_forward(x, w, p, stride, 1), probe); };
  rows->push_back({prefix + ".input", gradient_check(fx, gr.input, x, kH), kTolLayer});
  rows->push_back({prefix + ".weight", gradient_check(fw, gr.weight, w, kH), kTolLayer});
  rows->push_back({prefix + ".bias", gradient_check(fb, gr.bias, b, kH), kTolLayer});
}

void activation_rows(std::vector<GradCheckRow>* rows) {
  Rng rng(11);
  const Tensor x = away_from_zero(randn({2, 3, 5, 5}, rng, 1.0), 0.05);
  const Tensor probe = randn(x.shape(), rng, 1.0);

  auto f_lrelu = [&](const Tensor& p) { return dot(leaky_relu_forward(p, 0.2), probe); };
  rows->push_back({"leaky_relu.input",
                   gradient_check(f_lrelu, leaky_relu_backward(probe, x, 0.2), x, kH),
                   kTolLayer});

  auto f_relu = [&](const Tensor& p) { return dot(leaky_relu_forward(p, 0.0), probe); };
  rows->push_back({"relu.input",
                   gradient_check(f_relu, leaky_relu_backward(probe, x, 0.0), x, kH),
                   kTolLayer});

  const Tensor y = sigmoid_forward(x);
  auto f_sig = [&](const Tensor& p) { return dot(sigmoid_forward(p), probe); };
  rows->push_back({"sigmoid.input",
                   gradient_check(f_sig, sigmoid_backward(probe, y), x, kH), kTolLayer});
}

void batchnorm_rows(std::vector<GradCheckRow>* rows) {
  Rng rng(12);
  const Tensor x = randn({3, 2, 4, 4}, rng, 1.0);
  const Tensor gamma = away_from_zero(randn({2}, rng, 0.5), 0.2);
  const Tensor beta = randn({2}, rng, 0.5);
  const Tensor probe = randn(x.shape(), rng, 1.0);
  const double momentum = 0.1, eps = 1e-5;

  auto fwd = [&](const Tensor& px, const Tensor& pg, const Tensor& pb,
                 BatchNormCache* cache) {
    RunningStats stats{Tensor::zeros({2}), Tensor::full({2}, 1.0)};
    return batchnorm_forward(px, pg, pb, stats, BnMode::kTrain, momentum, eps, cache);
  };
  BatchNormCache cache;
  fwd(x, gamma, beta, &cache);
  const BatchNormGrads gr = batchnorm_backward(probe, gamma, cache, BnMode::kTrain);

  auto fx = [&](const Tensor& p) { return dot(fwd(p, gamma, beta, nullptr), probe); };
  auto fg = [&](const Tensor& p) { return dot(fwd(x, p, beta, nullptr), probe); };
  auto fb = [&](const Tensor& p) { return dot(fwd(x, gamma, p, nullptr), probe); };
  rows->push_back({"batchnorm.input", gradient_check(fx, gr.input, x, kH), kTolLayer});
  rows->push_back({"batchnorm.gamma", gradient_check(fg, gr.gamma, gamma, kH), kTolLayer});
  rows->push_back({"batchnorm.beta", gradient_check(fb, gr.beta, beta, kH), kTolLayer});
}

void fc_pool_rows(std::vector<GradCheckRow>* rows) {
  Rng rng(13);
  const Tensor x = randn({3, 2, 4, 4}, rng, 1.0);
  const Tensor w = randn({5, 32}, rng, 0.4);
  const Tensor b = randn({5}, rng, 0.4);
  const Tensor probe = randn({3, 5}, rng, 1.0);
  const FcGrads gr = fully_connected_backward(probe, x, w);

  auto fx = [&](const Tensor& p) { return dot(fully_connected_forward(p, w, b), probe); };
  auto fw = [&](const Tensor& p) { return dot(fully_connected_forward(x, p, b), probe); };
  auto fb = [&](const Tensor& p) { return dot(fully_connected_forward(x, w, p), probe); };
  rows->push_back({"fc.input", gradient_check(fx, gr.input, x, kH), kTolLayer});
  rows->push_back({"fc.weight", gradient_check(fw, gr.weight, w, kH), kTolLayer});
  rows->push_back({"fc.bias", gradient_check(fb, gr.bias, b, kH), kTolLayer});

  const Tensor pool_probe = randn({3, 2, 2, 2}, rng, 1.0);
  auto fp = [&](const Tensor& p) { return dot(avgpool2_forward(p), pool_probe); };
  rows->push_back({"avgpool2.input",
                   gradient_check(fp, avgpool2_backward(pool_probe), x, kH), kTolLayer});
}

void loss_rows(std::vector<GradCheckRow>* rows) {
  Rng rng(14);
  const Tensor x = randn({2, 1, 6, 6}, rng, 0.5);
  Tensor xhat = x;
  const Tensor offset = away_from_zero(randn(x.shape(), rng, 0.2), 0.1);
  for (std::int64_t i = 0; i < xhat.numel(); ++i) xhat[i] += offset[i];

  auto f_mse = [&](const Tensor& p) { return mse_loss(x, p).loss; };
  rows->push_back({"mse.estimate",
                   gradient_check(f_mse, mse_loss(x, xhat).grad, xhat, kH), kTolLayer});

  auto f_cb = [&](const Tensor& p) { return charbonnier(p, x, 0.001).loss; };
  rows->push_back({"charbonnier.estimate",
                   gradient_check(f_cb, charbonnier(xhat, x, 0.001).grad, xhat, kH),
                   kTolLayer});

  FeatureNetSpec spec;
  spec.channels = {4, 4};
  spec.pool_after = {1};
  spec.taps = {1, 2};
  spec.seed = 7;
  const FeatureNet fn(spec);
  const Tensor fx = randn({1, 1, 12, 12}, rng, 0.5);
  Tensor fxhat = fx;
  for (std::int64_t i = 0; i < fxhat.numel(); ++i) fxhat[i] += 0.15;
  auto f_feat = [&](const Tensor& p) { return feature_charbonnier(p, fx, fn, 0.001).loss; };
  rows->push_back({"feature_loss.estimate",
                   gradient_check(f_feat, feature_charbonnier(fxhat, fx, fn, 0.001).grad,
                                  fxhat, kH, kFloor),
                   kTolComposite});
}

void gan_rows(std::vector<GradCheckRow>* rows) {
  Rng rng(15);
  Tensor d_real({6, 1}), d_fake({6, 1});
  for (std::int64_t i = 0; i < 6; ++i) {
    d_real[i] = 0.15 + 0.7 * rng.uniform();
    d_fake[i] = 0.15 + 0.7 * rng.uniform();
  }
  for (GanMode mode : {GanMode::kMinimax, GanMode::kNonsaturating}) {
    const char* tag = mode == GanMode::kMinimax ? "minimax" : "nonsat";
    const GanLossResult gl = gan_losses(d_real, d_fake, mode);
    auto f_dr = [&](const Tensor& p) { return gan_losses(p, d_fake, mode).loss_d; };
    auto f_df = [&](const Tensor& p) { return gan_losses(d_real, p, mode).loss_d; };
    auto f_g = [&](const Tensor& p) { return gan_losses(d_real, p, mode).loss_g; };
    rows->push_back({std::string("gan_") + tag + ".d_real",
                     gradient_check(f_dr, gl.grad_d_real, d_real, kH), kTolLayer});
    rows->push_back({std::string("gan_") + tag + ".d_fake",
                     gradient_check(f_df, gl.grad_d_fake_d, d_fake, kH), kTolLayer});
    rows->push_back({std::string("gan_") + tag + ".generator",
                     gradient_check(f_g, gl.grad_d_fake_g, d_fake, kH), kTolLayer});
  }
}

DiscriminatorConfig tiny_disc_config() {
  DiscriminatorConfig dc;
  dc.conv_channels = {4, 8};
  dc.input_size = 12;
  return dc;
}

void total_loss_rows(std::vector<GradCheckRow>* rows) {
  Rng rng(16);
  Discriminator d(tiny_disc_config(), 21);
  FeatureNetSpec spec;
  spec.channels = {4, 4};
  spec.pool_after = {1};
  spec.taps = {2};
  spec.seed = 9;
  const FeatureNet fn(spec);
  LossWeights w;
  w.alpha = 0.25;
  w.beta = 0.05;

  const Tensor x = randn({2, 1, 12, 12}, rng, 0.4);
  Tensor xhat = x;
  const Tensor offset = away_from_zero(randn(x.shape(), rng, 0.15), 0.08);
  for (std::int64_t i = 0; i < xhat.numel(); ++i) xhat[i] += offset[i];

  const LossGrad at = total_loss_at(xhat, x, &d, &fn, w, PixelLossKind::kCharbonnier,
                                    GanMode::kMinimax);
  auto f = [&](const Tensor& p) {
    return total_loss_at(p, x, &d, &fn, w, PixelLossKind::kCharbonnier, GanMode::kMinimax)
        .loss;
  };
  rows->push_back({"total_loss.estimate", gradient_check(f, at.grad, xhat, kH, kFloor),
                   kTolComposite});
}

void generator_rows(std::vector<GradCheckRow>* rows) {
  GeneratorConfig gc;
  gc.base_channels = 8;
  gc.num_res_blocks = 2;
  gc.patch_size = 12;
  Generator g(gc, 31);
  Rng rng(17);
  const Tensor y = randn({1, 5, 1, 12, 12}, rng, 0.5);
  const Tensor x = randn({1, 1, 12, 12}, rng, 0.5);

  GeneratorCache cache;
  const Tensor xhat = g.forward(y, &cache);
  const LossGrad l = mse_loss(x, xhat);
  g.zero_grads();
  const Tensor grad_y = g.backward(l.grad, cache);

  auto f_y = [&](const Tensor& p) { return mse_loss(x, g.forward(p)).loss; };
  rows->push_back({"generator.input", gradient_check(f_y, grad_y, y, kH, kFloor),
                   kTolComposite});

  auto f_params = [&] { return mse_loss(x, g.forward(y)).loss; };
  Rng pick(18);
  rows->push_back({"generator.params",
                   gradient_check_params(f_params, g.params(), kH, 250, pick, kFloor),
                   kTolComposite});
}

void discriminator_rows(std::vector<GradCheckRow>* rows) {
  Discriminator d(tiny_disc_config(), 22);
  Rng rng(19);
  const Tensor x_real = randn({3, 1, 12, 12}, rng, 0.5);
  const Tensor x_fake = randn({3, 1, 12, 12}, rng, 0.5);

  auto loss_of = [&](const Tensor& real, const Tensor& fake) {
    const Tensor p_real = d.forward(real, BnMode::kTrain);
    const Tensor p_fake = d.forward(fake, BnMode::kTrain);
    return gan_losses(p_real, p_fake, GanMode::kMinimax).loss_d;
  };

  DiscriminatorCache cache_real, cache_fake;
  const Tensor p_real = d.forward(x_real, BnMode::kTrain, &cache_real);
  const Tensor p_fake = d.forward(x_fake, BnMode::kTrain, &cache_fake);
  const GanLossResult gl = gan_losses(p_real, p_fake, GanMode::kMinimax);
  d.zero_grads();
  const Tensor grad_real = d.backward(gl.grad_d_real, cache_real);
  d.backward(gl.grad_d_fake_d, cache_fake);

  auto f_x = [&](const Tensor& p) { return loss_of(p, x_fake); };
  rows->push_back({"discriminator.input",
                   gradient_check(f_x, grad_real, x_real, kH, kFloor), kTolComposite});

  auto f_params = [&] { return loss_of(x_real, x_fake); };
  Rng pick(20);
  rows->push_back({"discriminator.params",
                   gradient_check_params(f_params, d.params(), kH, 250, pick, kFloor),
                   kTolComposite});
}

// Deliberately wrong analytic gradient; the checker must flag it.
void corrupted_row(std::vector<GradCheckRow>* rows) {
  Rng rng(23);
  const Tensor x = randn({1, 2, 5, 5}, rng, 1.0);
  const Tensor w = randn({2, 2, 3, 3}, rng, 0.5);
  const Tensor b = randn({2}, rng, 0.5);
  const Tensor probe = randn(conv2d_forward(x, w, b, 1, 1).shape(), rng, 1.0);
  Conv2dGrads gr = conv2d_backward(probe, x, w, 1, 1);
  gr.input[0] = gr.input[0] * 1.05 + 0.5;
  auto f = [&](const Tensor& p) { return dot(conv2d_forward(p, w, b, 1, 1), probe); };
  rows->push_back({"selftest-corrupted", gradient_check(f, gr.input, x, kH), kTolLayer});
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck_suite(const std::string& which) {
  std::vector<GradCheckRow> all;
  if (which == "selftest-corrupted") {
    corrupted_row(&all);
    return all;
  }
  conv_rows("conv2d", 1, &all);
  conv_rows("conv2d_s2", 2, &all);
  activation_rows(&all);
  batchnorm_rows(&all);
  fc_pool_rows(&all);
  loss_rows(&all);
  gan_rows(&all);
  total_loss_rows(&all);
  generator_rows(&all);
  discriminator_rows(&all);
  if (which == "all" || which.empty()) return all;
  std::vector<GradCheckRow> picked;
  for (GradCheckRow& r : all)
    if (r.name.rfind(which, 0) == 0) picked.push_back(std::move(r));
  return picked;
}

}  // namespace vsr
