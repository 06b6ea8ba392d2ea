#pragma once

// Full-reference quality metrics: PSNR, single-scale SSIM, and the
// feature-space distance proxy (labeled as such in every report).

#include <string>
#include <vector>

#include "vsr/models.hpp"
#include "vsr/tensor.hpp"

namespace vsr {

// 10*log10(peak^2 / MSE) after cropping `crop` pixels from every border of the
// trailing two axes; returns +inf when MSE is exactly zero.
double psnr(const Tensor& x, const Tensor& xhat, double peak = 1.0, int crop = 0);

// Single-scale SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01*peak)^2,
// C2=(0.03*peak)^2, mean over valid window positions (and leading slices).
double ssim(const Tensor& x, const Tensor& xhat, double peak = 1.0, int crop = 0);

// Mean squared difference of unit-normalized tapped features (per-channel
// vector normalization at every spatial site), averaged over taps.
double feature_distance(const Tensor& x, const Tensor& xhat, const FeatureNet& fn);

struct EvalRow {
  std::string frame_id;
  double psnr = 0.0, ssim = 0.0, featdist = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0, mean_ssim = 0.0, mean_featdist = 0.0;
  int crop = 0, scale = 0;
  std::string model_id;
  bool center_frame_only = false;

  void finalize();  // recompute the aggregate means
  std::string to_text() const;
  std::string to_csv() const;  // frame_id,psnr,ssim,featdist
};

}  // namespace vsr
