#pragma once

// Serial reference implementations. Straight loops with no blocking, no
// separability tricks and no threads, kept as the ground truth the fast
// paths are checked against (and timed against in bench/).
//  - conv accumulation order (bias first, then c,u,v ascending) is the order
//    the fast path reproduces.
//  - imresize_direct builds one explicit 2-D weight table per output pixel
//    and sums it in a single pass, no row/column intermediate.
//  - ssim_direct evaluates the windowed formula per position from scratch.

#include "vsr/kernels.hpp"
#include "vsr/tensor.hpp"

namespace vsr::ref {

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      int stride, int pad);
Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input,
                            const Tensor& weight, int stride, int pad);

Tensor imresize_direct(const Tensor& image, std::int64_t out_h, std::int64_t out_w,
                       bool antialias);

double ssim_direct(const Tensor& x, const Tensor& xhat, double peak, int crop);

}  // namespace vsr::ref
