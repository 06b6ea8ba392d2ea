#pragma once

// Training objectives: MSE, Charbonnier in pixel and feature space, the
// adversarial pair, and the weighted total objective. Each returns the scalar
// loss together with its analytic gradient w.r.t. the estimate.

#include "vsr/models.hpp"
#include "vsr/tensor.hpp"

namespace vsr {

enum class Reduction { kMean, kSum };

struct LossGrad {
  double loss = 0.0;
  Tensor grad;  // w.r.t. the estimate (xhat)
};

LossGrad mse_loss(const Tensor& x, const Tensor& xhat, Reduction reduction = Reduction::kMean);

// sum over all elements of sqrt((xhat-x)^2 + eps^2)
LossGrad charbonnier(const Tensor& xhat, const Tensor& x, double epsilon);

// Charbonnier summed over all tapped feature maps of the frozen feature net,
// backpropagated to xhat. The feature net's weights receive no gradient.
LossGrad feature_charbonnier(const Tensor& xhat, const Tensor& x, const FeatureNet& fn,
                             double epsilon);

struct LossWeights {
  double alpha = 0.3;    // feature-space weight (non-paper default)
  double beta = 0.01;    // adversarial weight (non-paper default)
  double epsilon = 0.001;
  // full_gan additionally requires alpha > 0 and beta > 0
  void validate(bool full_gan) const;
};

enum class GanMode { kMinimax, kNonsaturating };

struct GanLossResult {
  double loss_d = 0.0;
  double loss_g = 0.0;
  Tensor grad_d_real;    // dL_D / d d_real
  Tensor grad_d_fake_d;  // dL_D / d d_fake
  Tensor grad_d_fake_g;  // dL_G / d d_fake
};

// d_real/d_fake: (B,1) probabilities, clamped to [1e-12, 1-1e-12] before logs.
// L_D = -mean(log d_real) - mean(log(1 - d_fake));
// minimax L_G = mean(log(1 - d_fake)); nonsaturating L_G = -mean(log d_fake).
GanLossResult gan_losses(const Tensor& d_real, const Tensor& d_fake, GanMode mode);

enum class PixelLossKind { kCharbonnier, kL2 };

struct TotalLossParts {
  double total = 0.0, pixel = 0.0, feature = 0.0, adversarial = 0.0;
};

// alpha*feature + beta*adversarial + (1-alpha-beta)*pixel, gradient w.r.t. xhat.
// With beta > 0 the discriminator runs a train-mode pass as a frozen critic; its
// gradient buffers are used as scratch (the caller's own D step re-zeroes them).
// kL2 swaps the Charbonnier distance for the summed squared distance in both the
// pixel and feature terms.
LossGrad total_loss_at(const Tensor& xhat, const Tensor& x, Discriminator* d,
                       const FeatureNet* fn, const LossWeights& w, PixelLossKind kind,
                       GanMode gmode, TotalLossParts* parts = nullptr);

// Convenience wrapper running the generator forward first.
LossGrad total_loss(const Tensor& x, const Tensor& y, const Generator& g, Discriminator& d,
                    const FeatureNet& fn, const LossWeights& w,
                    PixelLossKind kind = PixelLossKind::kCharbonnier,
                    GanMode gmode = GanMode::kMinimax, TotalLossParts* parts = nullptr);

}  // namespace vsr
