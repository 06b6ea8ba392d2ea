#include "vsr/reference.hpp"

#include <algorithm>
#include <cmath>

#include "vsr/resize.hpp"

namespace vsr::ref {

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      int stride, int pad) {
  const std::int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  std::int64_t out_h = 0, out_w = 0;
  conv2d_out_size(h, w, kh, kw, stride, pad, &out_h, &out_w);

  Tensor out({batch, cout, out_h, out_w});
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t o = 0; o < cout; ++o)
      for (std::int64_t i = 0; i < out_h; ++i)
        for (std::int64_t j = 0; j < out_w; ++j) {
          double s = bias[o];
          for (std::int64_t c = 0; c < cin; ++c)
            for (std::int64_t u = 0; u < kh; ++u)
              for (std::int64_t v = 0; v < kw; ++v) {
                const std::int64_t y = i * stride + u - pad;
                const std::int64_t x = j * stride + v - pad;
                if (y < 0 || y >= h || x < 0 || x >= w) continue;
                s += weight.at(o, c, u, v) * input.at(b, c, y, x);
              }
          out.at(b, o, i, j) = s;
        }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input,
                            const Tensor& weight, int stride, int pad) {
  const std::int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  std::int64_t out_h = 0, out_w = 0;
  conv2d_out_size(h, w, kh, kw, stride, pad, &out_h, &out_w);

  Conv2dGrads g{Tensor(input.shape()), Tensor(weight.shape()), Tensor({cout})};
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t o = 0; o < cout; ++o)
      for (std::int64_t i = 0; i < out_h; ++i)
        for (std::int64_t j = 0; j < out_w; ++j) {
          const double gv = grad_out.at(b, o, i, j);
          g.bias[o] += gv;
          for (std::int64_t c = 0; c < cin; ++c)
            for (std::int64_t u = 0; u < kh; ++u)
              for (std::int64_t v = 0; v < kw; ++v) {
                const std::int64_t y = i * stride + u - pad;
                const std::int64_t x = j * stride + v - pad;
                if (y < 0 || y >= h || x < 0 || x >= w) continue;
                g.weight.at(o, c, u, v) += gv * input.at(b, c, y, x);
                g.input.at(b, c, y, x) += gv * weight.at(o, c, u, v);
              }
        }
  return g;
}

namespace {

// Raw (unnormalized) taps of the resampling kernel along one axis.
void axis_taps(std::int64_t in, std::int64_t out, bool antialias, std::int64_t i,
               std::vector<std::int64_t>* idx, std::vector<double>* w) {
  const double s = static_cast<double>(out) / static_cast<double>(in);
  const double kscale = (antialias && s < 1.0) ? s : 1.0;
  const double support = 4.0 / kscale;
  const std::int64_t taps = static_cast<std::int64_t>(std::ceil(support)) + 2;
  const double u = (static_cast<double>(i) + 0.5) / s - 0.5;
  const std::int64_t left = static_cast<std::int64_t>(std::floor(u - support / 2.0)) + 1;
  idx->clear();
  w->clear();
  for (std::int64_t t = 0; t < taps; ++t) {
    const std::int64_t j = left + t;
    idx->push_back(std::clamp<std::int64_t>(j, 0, in - 1));
    w->push_back(vsr::cubic_kernel(kscale * (u - static_cast<double>(j))));
  }
}

}  // namespace

Tensor imresize_direct(const Tensor& image, std::int64_t out_h, std::int64_t out_w,
                       bool antialias) {
  const std::int64_t ch = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out({ch, out_h, out_w});
  std::vector<std::int64_t> ridx, cidx;
  std::vector<double> rw, cw;
  for (std::int64_t i = 0; i < out_h; ++i) {
    axis_taps(h, out_h, antialias, i, &ridx, &rw);
    for (std::int64_t j = 0; j < out_w; ++j) {
      axis_taps(w, out_w, antialias, j, &cidx, &cw);
      // explicit 2-D window, normalized by its total mass
      double total = 0.0;
      for (double a : rw)
        for (double b : cw) total += a * b;
      for (std::int64_t c = 0; c < ch; ++c) {
        double s = 0.0;
        for (std::size_t a = 0; a < rw.size(); ++a)
          for (std::size_t b = 0; b < cw.size(); ++b)
            s += rw[a] * cw[b] * image.at3(c, ridx[a], cidx[b]);
        out.at3(c, i, j) = s / total;
      }
    }
  }
  return out;
}

double ssim_direct(const Tensor& x, const Tensor& xhat, double peak, int crop) {
  check_same_shape(x, xhat, "ssim_direct");
  if (x.rank() < 2) throw ShapeError("ssim_direct: need at least (H,W)");
  const std::int64_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  const std::int64_t slices = x.numel() / (h * w);
  const std::int64_t ch = h - 2 * crop, cw = w - 2 * crop;
  if (ch < 11 || cw < 11) throw ConfigError("ssim_direct: image smaller than 11x11 after crop");

  double win[11][11];
  double wsum = 0.0;
  for (int a = 0; a < 11; ++a)
    for (int b = 0; b < 11; ++b) {
      const double dy = a - 5, dx = b - 5;
      win[a][b] = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
      wsum += win[a][b];
    }
  for (int a = 0; a < 11; ++a)
    for (int b = 0; b < 11; ++b) win[a][b] /= wsum;

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  double acc = 0.0;
  std::int64_t count = 0;
  for (std::int64_t s = 0; s < slices; ++s) {
    const double* px = x.data() + s * h * w;
    const double* py = xhat.data() + s * h * w;
    for (std::int64_t i = 0; i + 11 <= ch; ++i)
      for (std::int64_t j = 0; j + 11 <= cw; ++j) {
        double mx = 0, my = 0;
        for (int a = 0; a < 11; ++a)
          for (int b = 0; b < 11; ++b) {
            const std::int64_t yy = crop + i + a, xx = crop + j + b;
            mx += win[a][b] * px[yy * w + xx];
            my += win[a][b] * py[yy * w + xx];
          }
        double vx = 0, vy = 0, cov = 0;
        for (int a = 0; a < 11; ++a)
          for (int b = 0; b < 11; ++b) {
            const std::int64_t yy = crop + i + a, xx = crop + j + b;
            const double dx = px[yy * w + xx] - mx;
            const double dy = py[yy * w + xx] - my;
            vx += win[a][b] * dx * dx;
            vy += win[a][b] * dy * dy;
            cov += win[a][b] * dx * dy;
          }
        acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  }
  return acc / static_cast<double>(count);
}

}  // namespace vsr::ref
