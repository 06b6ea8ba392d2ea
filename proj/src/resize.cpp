#include "vsr/resize.hpp"

#include <algorithm>
#include <cmath>

namespace vsr {

double cubic_kernel(double x) {
  const double ax = std::fabs(x);
  if (ax <= 1.0) return (1.5 * ax - 2.5) * ax * ax + 1.0;
  if (ax < 2.0) return ((-0.5 * ax + 2.5) * ax - 4.0) * ax + 2.0;
  return 0.0;
}

namespace {

// One axis of the resampling plan: for each destination index, the clamped
// source taps and their renormalized weights.
struct AxisPlan {
  std::int64_t taps = 0;
  std::vector<std::int64_t> idx;  // out*taps, clamped to [0, in-1]
  std::vector<double> w;          // out*taps, rows sum to 1
};

AxisPlan make_plan(std::int64_t in, std::int64_t out, bool antialias) {
  const double s = static_cast<double>(out) / static_cast<double>(in);
  const double kscale = (antialias && s < 1.0) ? s : 1.0;
  const double support = 4.0 / kscale;
  AxisPlan plan;
  plan.taps = static_cast<std::int64_t>(std::ceil(support)) + 2;
  plan.idx.resize(static_cast<std::size_t>(out * plan.taps));
  plan.w.resize(static_cast<std::size_t>(out * plan.taps));
  for (std::int64_t i = 0; i < out; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / s - 0.5;
    const std::int64_t left =
        static_cast<std::int64_t>(std::floor(u - support / 2.0)) + 1;
    double sum = 0.0;
    for (std::int64_t t = 0; t < plan.taps; ++t) {
      const std::int64_t j = left + t;
      const double wv = cubic_kernel(kscale * (u - static_cast<double>(j)));
      plan.w[static_cast<std::size_t>(i * plan.taps + t)] = wv;
      plan.idx[static_cast<std::size_t>(i * plan.taps + t)] =
          std::clamp<std::int64_t>(j, 0, in - 1);
      sum += wv;
    }
    for (std::int64_t t = 0; t < plan.taps; ++t)
      plan.w[static_cast<std::size_t>(i * plan.taps + t)] /= sum;
  }
  return plan;
}

}  // namespace

Tensor imresize_bicubic(const Tensor& image, std::int64_t out_h, std::int64_t out_w,
                        bool antialias) {
  if (image.rank() != 3)
    throw ShapeError("imresize: image must be (C,H,W), got " + shape_str(image.shape()));
  if (out_h < 1 || out_w < 1) throw ShapeError("imresize: output extents must be >= 1");
  const std::int64_t ch = image.dim(0), h = image.dim(1), w = image.dim(2);

  const AxisPlan rows = make_plan(h, out_h, antialias);
  Tensor tmp({ch, out_h, w});
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < ch; ++c) {
    for (std::int64_t i = 0; i < out_h; ++i) {
      double* dst = tmp.data() + (c * out_h + i) * w;
      for (std::int64_t x = 0; x < w; ++x) dst[x] = 0.0;
      for (std::int64_t t = 0; t < rows.taps; ++t) {
        const double wv = rows.w[static_cast<std::size_t>(i * rows.taps + t)];
        const double* src =
            image.data() + (c * h + rows.idx[static_cast<std::size_t>(i * rows.taps + t)]) * w;
        for (std::int64_t x = 0; x < w; ++x) dst[x] += wv * src[x];
      }
    }
  }

  const AxisPlan cols = make_plan(w, out_w, antialias);
  Tensor out({ch, out_h, out_w});
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < ch; ++c) {
    for (std::int64_t i = 0; i < out_h; ++i) {
      const double* src = tmp.data() + (c * out_h + i) * w;
      double* dst = out.data() + (c * out_h + i) * out_w;
      for (std::int64_t j = 0; j < out_w; ++j) {
        double s = 0.0;
        for (std::int64_t t = 0; t < cols.taps; ++t)
          s += cols.w[static_cast<std::size_t>(j * cols.taps + t)] *
               src[cols.idx[static_cast<std::size_t>(j * cols.taps + t)]];
        dst[j] = s;
      }
    }
  }
  return out;
}

}  // namespace vsr
