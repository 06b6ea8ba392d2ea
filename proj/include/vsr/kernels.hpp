#pragma once

#include <vector>

#include "vsr/tensor.hpp"

// Differentiable layer kernels. Forward passes and their hand-derived
// backward passes. The hot kernels (convolution, batch norm) are OpenMP
// parallel; summation order per output element is fixed and independent of
// the thread count, so results are deterministic. Serial reference
// implementations live in vsr::ref (reference.hpp).

namespace vsr {

// --- convolution -----------------------------------------------------------

// out[b,o,i,j] = bias[o] + sum_{c,u,v} weight[o,c,u,v] *
//                input_padded[b,c,i*stride+u,j*stride+v], zero padding.
// input (B,Cin,H,W), weight (Cout,Cin,kh,kw), bias (Cout). kh,kw odd.
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      int stride, int pad);

struct Conv2dGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input,
                            const Tensor& weight, int stride, int pad);

// Output spatial extents for the given convolution geometry; throws
// ShapeError when non-positive.
void conv2d_out_size(std::int64_t h, std::int64_t w, std::int64_t kh, std::int64_t kw,
                     int stride, int pad, std::int64_t* out_h, std::int64_t* out_w);

// --- activations ------------------------------------------------------------

// slope in [0,1). slope 0 is plain ReLU. Subgradient at 0 takes the
// positive branch.
Tensor leaky_relu_forward(const Tensor& x, double slope);
Tensor leaky_relu_backward(const Tensor& grad_out, const Tensor& x, double slope);

Tensor sigmoid_forward(const Tensor& x);
// y is the saved forward output
Tensor sigmoid_backward(const Tensor& grad_out, const Tensor& y);

// --- batch normalization ----------------------------------------------------

struct RunningStats {
  Tensor mean;  // (C)
  Tensor var;   // (C), biased
};

enum class BnMode { kTrain, kEval };

struct BatchNormCache {
  Tensor xhat;     // normalized input, same shape as x
  Tensor inv_std;  // (C)
};

// Train mode normalizes per channel by batch mean / biased variance, then
// scales and shifts; running stats are updated as
//   running = (1 - momentum) * running + momentum * batch.
// Eval mode normalizes with the running stats. Requires B*H*W >= 2 in train
// mode. cache may be null for inference-only calls.
Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         RunningStats& stats, BnMode mode, double momentum, double eps,
                         BatchNormCache* cache);

struct BatchNormGrads {
  Tensor input;
  Tensor gamma;
  Tensor beta;
};

BatchNormGrads batchnorm_backward(const Tensor& grad_out, const Tensor& gamma,
                                  const BatchNormCache& cache, BnMode mode);

// --- dense / shape ops ------------------------------------------------------

// x (B, ...) flattened per sample; weight (out_dim, D), bias (out_dim).
Tensor fully_connected_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct FcGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};

FcGrads fully_connected_backward(const Tensor& grad_out, const Tensor& x,
                                 const Tensor& weight);

Tensor add_forward(const Tensor& a, const Tensor& b);
// backward of add passes grad_out through to both inputs unchanged

Tensor channel_concat(const std::vector<const Tensor*>& xs);
std::vector<Tensor> channel_split(const Tensor& x, const std::vector<std::int64_t>& channels);

// 2x2 average pooling, stride 2; H and W must be even.
Tensor avgpool2_forward(const Tensor& x);
Tensor avgpool2_backward(const Tensor& grad_out);

}  // namespace vsr
