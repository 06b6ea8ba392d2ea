#include "vsr/losses.hpp"

#include <algorithm>
#include <cmath>

namespace vsr {

LossGrad mse_loss(const Tensor& x, const Tensor& xhat, Reduction reduction) {
  check_same_shape(x, xhat, "mse_loss");
  LossGrad out{0.0, Tensor(xhat.shape())};
  const std::int64_t n = x.numel();
  const double scale = reduction == Reduction::kMean ? 1.0 / static_cast<double>(n) : 1.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = xhat[i] - x[i];
    out.loss += d * d;
    out.grad[i] = 2.0 * d * scale;
  }
  out.loss *= scale;
  return out;
}

LossGrad charbonnier(const Tensor& xhat, const Tensor& x, double epsilon) {
  check_same_shape(xhat, x, "charbonnier");
  if (epsilon <= 0.0) throw ConfigError("charbonnier: epsilon must be > 0");
  LossGrad out{0.0, Tensor(xhat.shape())};
  const std::int64_t n = x.numel();
  const double e2 = epsilon * epsilon;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = xhat[i] - x[i];
    const double r = std::sqrt(d * d + e2);
    out.loss += r;
    out.grad[i] = d / r;
  }
  return out;
}

namespace {

// Charbonnier (or summed-l2) over one feature tensor: loss plus grad.
double tap_distance(const Tensor& fhat, const Tensor& f, double epsilon, PixelLossKind kind,
                    Tensor* grad) {
  *grad = Tensor(fhat.shape());
  double loss = 0.0;
  const std::int64_t n = f.numel();
  if (kind == PixelLossKind::kCharbonnier) {
    const double e2 = epsilon * epsilon;
    for (std::int64_t i = 0; i < n; ++i) {
      const double d = fhat[i] - f[i];
      const double r = std::sqrt(d * d + e2);
      loss += r;
      (*grad)[i] = d / r;
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      const double d = fhat[i] - f[i];
      loss += d * d;
      (*grad)[i] = 2.0 * d;
    }
  }
  return loss;
}

LossGrad feature_term(const Tensor& xhat, const Tensor& x, const FeatureNet& fn,
                      double epsilon, PixelLossKind kind) {
  FeatureCache cache;
  std::vector<Tensor> fhat = fn.forward(xhat, &cache);
  std::vector<Tensor> fx = fn.forward(x);
  LossGrad out;
  std::vector<Tensor> tap_grads(fhat.size());
  for (std::size_t t = 0; t < fhat.size(); ++t)
    out.loss += tap_distance(fhat[t], fx[t], epsilon, kind, &tap_grads[t]);
  out.grad = fn.backward_to_input(tap_grads, cache);
  return out;
}

constexpr double kProbFloor = 1e-12;
constexpr double kProbCeil = 1.0 - 1e-12;

// Generator-side adversarial term from d_fake alone; shared with gan_losses.
void generator_adv(const Tensor& d_fake, GanMode mode, double* loss_g, Tensor* grad) {
  const std::int64_t n = d_fake.numel();
  *grad = Tensor(d_fake.shape());
  *loss_g = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::int64_t i = 0; i < n; ++i) {
    if (d_fake[i] < 0.0 || d_fake[i] > 1.0)
      throw NumericError("gan loss: probability outside [0,1]");
    const double f = std::clamp(d_fake[i], kProbFloor, kProbCeil);
    if (mode == GanMode::kMinimax) {
      *loss_g += std::log(1.0 - f);
      (*grad)[i] = -inv_n / (1.0 - f);
    } else {
      *loss_g += -std::log(f);
      (*grad)[i] = -inv_n / f;
    }
  }
  *loss_g *= inv_n;
}

}  // namespace

LossGrad feature_charbonnier(const Tensor& xhat, const Tensor& x, const FeatureNet& fn,
                             double epsilon) {
  check_same_shape(xhat, x, "feature_charbonnier");
  if (epsilon <= 0.0) throw ConfigError("feature_charbonnier: epsilon must be > 0");
  return feature_term(xhat, x, fn, epsilon, PixelLossKind::kCharbonnier);
}

void LossWeights::validate(bool full_gan) const {
  if (alpha < 0.0 || beta < 0.0 || alpha + beta >= 1.0)
    throw ConfigError("loss weights: need alpha >= 0, beta >= 0, alpha + beta < 1");
  if (epsilon <= 0.0) throw ConfigError("loss weights: epsilon must be > 0");
  if (full_gan && (alpha <= 0.0 || beta <= 0.0))
    throw ConfigError("loss weights: GAN training needs alpha > 0 and beta > 0");
}

GanLossResult gan_losses(const Tensor& d_real, const Tensor& d_fake, GanMode mode) {
  check_same_shape(d_real, d_fake, "gan_losses");
  const std::int64_t n = d_real.numel();
  if (n < 1) throw ShapeError("gan_losses: empty probability tensors");

  GanLossResult out;
  out.grad_d_real = Tensor(d_real.shape());
  out.grad_d_fake_d = Tensor(d_fake.shape());
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::int64_t i = 0; i < n; ++i) {
    if (d_real[i] < 0.0 || d_real[i] > 1.0 || d_fake[i] < 0.0 || d_fake[i] > 1.0)
      throw NumericError("gan_losses: probability outside [0,1]");
    const double r = std::clamp(d_real[i], kProbFloor, kProbCeil);
    const double f = std::clamp(d_fake[i], kProbFloor, kProbCeil);
    out.loss_d += -std::log(r) - std::log(1.0 - f);
    out.grad_d_real[i] = -inv_n / r;
    out.grad_d_fake_d[i] = inv_n / (1.0 - f);
  }
  out.loss_d *= inv_n;
  generator_adv(d_fake, mode, &out.loss_g, &out.grad_d_fake_g);
  return out;
}

LossGrad total_loss_at(const Tensor& xhat, const Tensor& x, Discriminator* d,
                       const FeatureNet* fn, const LossWeights& w, PixelLossKind kind,
                       GanMode gmode, TotalLossParts* parts) {
  w.validate(false);
  check_same_shape(xhat, x, "total_loss");

  LossGrad pixel;
  pixel.loss = tap_distance(xhat, x, w.epsilon, kind, &pixel.grad);

  LossGrad out;
  out.grad = Tensor(xhat.shape());
  const double pixel_w = 1.0 - w.alpha - w.beta;
  out.loss = pixel_w * pixel.loss;
  for (std::int64_t i = 0; i < out.grad.numel(); ++i) out.grad[i] = pixel_w * pixel.grad[i];

  double feat_loss = 0.0;
  if (w.alpha > 0.0) {
    if (!fn) throw ConfigError("total_loss: alpha > 0 requires a feature net");
    LossGrad feat = feature_term(xhat, x, *fn, w.epsilon, kind);
    feat_loss = feat.loss;
    out.loss += w.alpha * feat.loss;
    for (std::int64_t i = 0; i < out.grad.numel(); ++i) out.grad[i] += w.alpha * feat.grad[i];
  }

  double adv_loss = 0.0;
  if (w.beta > 0.0) {
    if (!d) throw ConfigError("total_loss: beta > 0 requires a discriminator");
    DiscriminatorCache dc;
    Tensor d_fake = d->forward(xhat, BnMode::kTrain, &dc);
    Tensor gprob;
    generator_adv(d_fake, gmode, &adv_loss, &gprob);
    out.loss += w.beta * adv_loss;
    Tensor gpatch = d->backward(gprob, dc);
    for (std::int64_t i = 0; i < out.grad.numel(); ++i) out.grad[i] += w.beta * gpatch[i];
  }

  if (parts) *parts = TotalLossParts{out.loss, pixel.loss, feat_loss, adv_loss};
  return out;
}

LossGrad total_loss(const Tensor& x, const Tensor& y, const Generator& g, Discriminator& d,
                    const FeatureNet& fn, const LossWeights& w, PixelLossKind kind,
                    GanMode gmode, TotalLossParts* parts) {
  Tensor xhat = g.forward(y);
  return total_loss_at(xhat, x, &d, &fn, w, kind, gmode, parts);
}

}  // namespace vsr
