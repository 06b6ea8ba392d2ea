#pragma once

// Bicubic resampler matching the MATLAB-style contract: Keys kernel with
// a = -0.5, half-pixel coordinate mapping, kernel dilation + weight
// renormalization when downscaling with antialias, replicated borders,
// separable application (rows, then columns).

#include "vsr/tensor.hpp"

namespace vsr {

// Keys cubic interpolation kernel, a = -0.5. W(0)=1, W(1)=W(2)=0.
double cubic_kernel(double x);

// image (C,H,W) -> (C,out_h,out_w). antialias only affects downscaling axes.
Tensor imresize_bicubic(const Tensor& image, std::int64_t out_h, std::int64_t out_w,
                        bool antialias = true);

}  // namespace vsr
