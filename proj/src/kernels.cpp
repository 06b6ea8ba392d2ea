#include "vsr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vsr {

namespace {

// Cache-blocked C += A*B on row-major buffers, C rows preinitialized by the
// caller. Each C element accumulates its k terms in ascending order, so the
// result is independent of the blocking constants and matches a plain
// nested-loop accumulation bit for bit.
void gemm_accumulate(const double* a, const double* b, double* c,
                     std::int64_t m_total, std::int64_t k_total, std::int64_t n_total) {
  constexpr std::int64_t kKB = 192;
  constexpr std::int64_t kNB = 512;
  constexpr std::int64_t kMR = 4;
  for (std::int64_t n0 = 0; n0 < n_total; n0 += kNB) {
    const std::int64_t nb = std::min(kNB, n_total - n0);
    for (std::int64_t k0 = 0; k0 < k_total; k0 += kKB) {
      const std::int64_t kb = std::min(kKB, k_total - k0);
      std::int64_t m0 = 0;
      for (; m0 + kMR <= m_total; m0 += kMR) {
        double* c0 = c + (m0 + 0) * n_total + n0;
        double* c1 = c + (m0 + 1) * n_total + n0;
        double* c2 = c + (m0 + 2) * n_total + n0;
        double* c3 = c + (m0 + 3) * n_total + n0;
        for (std::int64_t k = k0; k < k0 + kb; ++k) {
          const double a0 = a[(m0 + 0) * k_total + k];
          const double a1 = a[(m0 + 1) * k_total + k];
          const double a2 = a[(m0 + 2) * k_total + k];
          const double a3 = a[(m0 + 3) * k_total + k];
          const double* br = b + k * n_total + n0;
          for (std::int64_t n = 0; n < nb; ++n) {
            const double bv = br[n];
            c0[n] += a0 * bv;
            c1[n] += a1 * bv;
            c2[n] += a2 * bv;
            c3[n] += a3 * bv;
          }
        }
      }
      for (; m0 < m_total; ++m0) {
        double* cr = c + m0 * n_total + n0;
        for (std::int64_t k = k0; k < k0 + kb; ++k) {
          const double av = a[m0 * k_total + k];
          const double* br = b + k * n_total + n0;
          for (std::int64_t n = 0; n < nb; ++n) cr[n] += av * br[n];
        }
      }
    }
  }
}

// Unfold one sample into a (Cin*kh*kw) x (out_h*out_w) matrix, zero padding.
// Row k = (c*kh+u)*kw+v, column n = i*out_w+j.
void im2col(const double* x, std::int64_t cin, std::int64_t h, std::int64_t w,
            std::int64_t kh, std::int64_t kw, int stride, int pad,
            std::int64_t out_h, std::int64_t out_w, double* col) {
  const std::int64_t n_total = out_h * out_w;
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < cin; ++c) {
    for (std::int64_t u = 0; u < kh; ++u) {
      for (std::int64_t v = 0; v < kw; ++v) {
        double* row = col + ((c * kh + u) * kw + v) * n_total;
        const double* src = x + c * h * w;
        for (std::int64_t i = 0; i < out_h; ++i) {
          const std::int64_t y = i * stride + u - pad;
          double* dst = row + i * out_w;
          if (y < 0 || y >= h) {
            std::memset(dst, 0, sizeof(double) * static_cast<std::size_t>(out_w));
            continue;
          }
          const double* srow = src + y * w;
          for (std::int64_t j = 0; j < out_w; ++j) {
            const std::int64_t xcol = j * stride + v - pad;
            dst[j] = (xcol >= 0 && xcol < w) ? srow[xcol] : 0.0;
          }
        }
      }
    }
  }
}

void check_conv_args(const Tensor& input, const Tensor& weight, const Tensor& bias,
                     int stride, int pad) {
  if (input.rank() != 4)
    throw ShapeError("conv2d: input must be (B,Cin,H,W), got " + shape_str(input.shape()));
  if (weight.rank() != 4)
    throw ShapeError("conv2d: weight must be (Cout,Cin,kh,kw), got " + shape_str(weight.shape()));
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0))
    throw ShapeError("conv2d: bias must be (Cout), got " + shape_str(bias.shape()));
  if (input.dim(1) != weight.dim(1))
    throw ShapeError("conv2d: input channels " + std::to_string(input.dim(1)) +
                     " do not match weight Cin " + std::to_string(weight.dim(1)));
  if (weight.dim(2) % 2 == 0 || weight.dim(3) % 2 == 0)
    throw ShapeError("conv2d: kernel extents must be odd, got " + shape_str(weight.shape()));
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: need stride >= 1 and pad >= 0");
}

}  // namespace

void conv2d_out_size(std::int64_t h, std::int64_t w, std::int64_t kh, std::int64_t kw,
                     int stride, int pad, std::int64_t* out_h, std::int64_t* out_w) {
  *out_h = (h + 2 * pad - kh) / stride + 1;
  *out_w = (w + 2 * pad - kw) / stride + 1;
  if (h + 2 * pad < kh || w + 2 * pad < kw || *out_h < 1 || *out_w < 1)
    throw ShapeError("conv2d: non-positive output extent for input " + std::to_string(h) +
                     "x" + std::to_string(w) + ", kernel " + std::to_string(kh) + "x" +
                     std::to_string(kw) + ", stride " + std::to_string(stride) + ", pad " +
                     std::to_string(pad));
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      int stride, int pad) {
  check_conv_args(input, weight, bias, stride, pad);
  const std::int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  std::int64_t out_h = 0, out_w = 0;
  conv2d_out_size(h, w, kh, kw, stride, pad, &out_h, &out_w);

  Tensor out({batch, cout, out_h, out_w});
  const std::int64_t k_total = cin * kh * kw;
  const std::int64_t n_total = out_h * out_w;
  std::vector<double> col(static_cast<std::size_t>(k_total * n_total));

  for (std::int64_t b = 0; b < batch; ++b) {
    im2col(input.data() + b * cin * h * w, cin, h, w, kh, kw, stride, pad, out_h, out_w,
           col.data());
    double* cdst = out.data() + b * cout * n_total;
#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < cout; ++o) {
      double* row = cdst + o * n_total;
      const double bv = bias[o];
      for (std::int64_t n = 0; n < n_total; ++n) row[n] = bv;
      gemm_accumulate(weight.data() + o * k_total, col.data(), row, 1, k_total, n_total);
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input,
                            const Tensor& weight, int stride, int pad) {
  const std::int64_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  std::int64_t out_h = 0, out_w = 0;
  conv2d_out_size(h, w, kh, kw, stride, pad, &out_h, &out_w);
  Shape expect{batch, cout, out_h, out_w};
  if (grad_out.shape() != expect)
    throw ShapeError("conv2d_backward: grad_out shape " + shape_str(grad_out.shape()) +
                     " does not match forward output " + shape_str(expect));

  Conv2dGrads g{Tensor(input.shape()), Tensor(weight.shape()), Tensor({cout})};
  const std::int64_t k_total = cin * kh * kw;
  const std::int64_t n_total = out_h * out_w;

#pragma omp parallel for schedule(static)
  for (std::int64_t o = 0; o < cout; ++o) {
    double s = 0.0;
    for (std::int64_t b = 0; b < batch; ++b) {
      const double* row = grad_out.data() + (b * cout + o) * n_total;
      for (std::int64_t n = 0; n < n_total; ++n) s += row[n];
    }
    g.bias[o] = s;
  }

  // weight^T packed once, (k_total x cout)
  std::vector<double> wt(static_cast<std::size_t>(k_total * cout));
  for (std::int64_t o = 0; o < cout; ++o)
    for (std::int64_t k = 0; k < k_total; ++k) wt[static_cast<std::size_t>(k * cout + o)] = weight.data()[o * k_total + k];

  std::vector<double> col(static_cast<std::size_t>(k_total * n_total));
  std::vector<double> col_grad(static_cast<std::size_t>(k_total * n_total));

  for (std::int64_t b = 0; b < batch; ++b) {
    im2col(input.data() + b * cin * h * w, cin, h, w, kh, kw, stride, pad, out_h, out_w,
           col.data());

    // grad_weight[o][k] += dot(grad_out[b][o][:], col[k][:]) with n ascending;
    // samples accumulate in batch order.
    const double* go = grad_out.data() + b * cout * n_total;
#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < cout; ++o) {
      const double* grow = go + o * n_total;
      double* wrow = g.weight.data() + o * k_total;
      for (std::int64_t k = 0; k < k_total; ++k) {
        const double* crow = col.data() + k * n_total;
        double s = 0.0;
        for (std::int64_t n = 0; n < n_total; ++n) s += grow[n] * crow[n];
        wrow[k] += s;
      }
    }

    // col_grad = weight^T * grad_out[b]
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < k_total; ++k) {
      double* row = col_grad.data() + k * n_total;
      for (std::int64_t n = 0; n < n_total; ++n) row[n] = 0.0;
      gemm_accumulate(wt.data() + k * cout, go, row, 1, cout, n_total);
    }

    // gather col_grad back onto the input grid
    double* gi = g.input.data() + b * cin * h * w;
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < cin; ++c) {
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          double s = 0.0;
          for (std::int64_t u = 0; u < kh; ++u) {
            const std::int64_t iy = y + pad - u;
            if (iy < 0 || iy % stride != 0) continue;
            const std::int64_t i = iy / stride;
            if (i >= out_h) continue;
            for (std::int64_t v = 0; v < kw; ++v) {
              const std::int64_t jx = x + pad - v;
              if (jx < 0 || jx % stride != 0) continue;
              const std::int64_t j = jx / stride;
              if (j >= out_w) continue;
              s += col_grad[static_cast<std::size_t>(((c * kh + u) * kw + v) * n_total + i * out_w + j)];
            }
          }
          gi[(c * h + y) * w + x] = s;
        }
      }
    }
  }
  return g;
}

Tensor leaky_relu_forward(const Tensor& x, double slope) {
  if (slope < 0.0 || slope >= 1.0) throw ConfigError("leaky_relu: slope must be in [0,1)");
  Tensor out(x.shape());
  const double* src = x.data();
  double* dst = out.data();
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = src[i] >= 0.0 ? src[i] : slope * src[i];
  return out;
}

Tensor leaky_relu_backward(const Tensor& grad_out, const Tensor& x, double slope) {
  check_same_shape(grad_out, x, "leaky_relu_backward");
  Tensor out(x.shape());
  const double* g = grad_out.data();
  const double* src = x.data();
  double* dst = out.data();
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = src[i] >= 0.0 ? g[i] : slope * g[i];
  return out;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor out(x.shape());
  const double* src = x.data();
  double* dst = out.data();
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = 1.0 / (1.0 + std::exp(-src[i]));
  return out;
}

Tensor sigmoid_backward(const Tensor& grad_out, const Tensor& y) {
  check_same_shape(grad_out, y, "sigmoid_backward");
  Tensor out(y.shape());
  const double* g = grad_out.data();
  const double* yv = y.data();
  double* dst = out.data();
  const std::int64_t n = y.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = g[i] * yv[i] * (1.0 - yv[i]);
  return out;
}

Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         RunningStats& stats, BnMode mode, double momentum, double eps,
                         BatchNormCache* cache) {
  if (x.rank() != 4) throw ShapeError("batchnorm: input must be (B,C,H,W)");
  const std::int64_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (gamma.numel() != ch || beta.numel() != ch)
    throw ShapeError("batchnorm: gamma/beta must have C elements");
  const std::int64_t m = batch * h * w;
  if (mode == BnMode::kTrain && m < 2)
    throw NumericError("batchnorm: degenerate batch, B*H*W must be >= 2 in train mode");

  Tensor out(x.shape());
  if (cache) {
    cache->xhat = Tensor(x.shape());
    cache->inv_std = Tensor({ch});
  }
  const std::int64_t plane = h * w;

#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < ch; ++c) {
    double mean = 0.0, var = 0.0;
    if (mode == BnMode::kTrain) {
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* p = x.data() + (b * ch + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) mean += p[i];
      }
      mean /= static_cast<double>(m);
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* p = x.data() + (b * ch + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          var += d * d;
        }
      }
      var /= static_cast<double>(m);
      stats.mean[c] = (1.0 - momentum) * stats.mean[c] + momentum * mean;
      stats.var[c] = (1.0 - momentum) * stats.var[c] + momentum * var;
    } else {
      mean = stats.mean[c];
      var = stats.var[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps);
    if (cache) cache->inv_std[c] = inv_std;
    const double gc = gamma[c], bc = beta[c];
    for (std::int64_t b = 0; b < batch; ++b) {
      const double* p = x.data() + (b * ch + c) * plane;
      double* q = out.data() + (b * ch + c) * plane;
      double* xh = cache ? cache->xhat.data() + (b * ch + c) * plane : nullptr;
      for (std::int64_t i = 0; i < plane; ++i) {
        const double xn = (p[i] - mean) * inv_std;
        if (xh) xh[i] = xn;
        q[i] = gc * xn + bc;
      }
    }
  }
  return out;
}

BatchNormGrads batchnorm_backward(const Tensor& grad_out, const Tensor& gamma,
                                  const BatchNormCache& cache, BnMode mode) {
  check_same_shape(grad_out, cache.xhat, "batchnorm_backward");
  const std::int64_t batch = grad_out.dim(0), ch = grad_out.dim(1);
  const std::int64_t plane = grad_out.dim(2) * grad_out.dim(3);
  const double m = static_cast<double>(batch * plane);

  BatchNormGrads g{Tensor(grad_out.shape()), Tensor({ch}), Tensor({ch})};

#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < ch; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::int64_t b = 0; b < batch; ++b) {
      const double* gp = grad_out.data() + (b * ch + c) * plane;
      const double* xh = cache.xhat.data() + (b * ch + c) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        sum_g += gp[i];
        sum_gx += gp[i] * xh[i];
      }
    }
    g.gamma[c] = sum_gx;
    g.beta[c] = sum_g;
    const double scale = gamma[c] * cache.inv_std[c];
    for (std::int64_t b = 0; b < batch; ++b) {
      const double* gp = grad_out.data() + (b * ch + c) * plane;
      const double* xh = cache.xhat.data() + (b * ch + c) * plane;
      double* gi = g.input.data() + (b * ch + c) * plane;
      if (mode == BnMode::kTrain) {
        for (std::int64_t i = 0; i < plane; ++i)
          gi[i] = scale * (gp[i] - sum_g / m - xh[i] * sum_gx / m);
      } else {
        for (std::int64_t i = 0; i < plane; ++i) gi[i] = scale * gp[i];
      }
    }
  }
  return g;
}

Tensor fully_connected_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() < 2) throw ShapeError("fully_connected: input must be (B, ...)");
  const std::int64_t batch = x.dim(0);
  const std::int64_t d = x.numel() / batch;
  if (weight.rank() != 2 || weight.dim(1) != d)
    throw ShapeError("fully_connected: weight " + shape_str(weight.shape()) +
                     " does not match flattened input dim " + std::to_string(d));
  const std::int64_t o_dim = weight.dim(0);
  if (bias.numel() != o_dim) throw ShapeError("fully_connected: bias/out_dim mismatch");

  Tensor out({batch, o_dim});
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* xb = x.data() + b * d;
    for (std::int64_t o = 0; o < o_dim; ++o) {
      const double* wr = weight.data() + o * d;
      double s = bias[o];
      for (std::int64_t i = 0; i < d; ++i) s += wr[i] * xb[i];
      out[b * o_dim + o] = s;
    }
  }
  return out;
}

FcGrads fully_connected_backward(const Tensor& grad_out, const Tensor& x,
                                 const Tensor& weight) {
  const std::int64_t batch = x.dim(0);
  const std::int64_t d = x.numel() / batch;
  const std::int64_t o_dim = weight.dim(0);
  if (grad_out.rank() != 2 || grad_out.dim(0) != batch || grad_out.dim(1) != o_dim)
    throw ShapeError("fully_connected_backward: grad_out shape mismatch");

  FcGrads g{Tensor(x.shape()), Tensor(weight.shape()), Tensor({o_dim})};
#pragma omp parallel for schedule(static)
  for (std::int64_t o = 0; o < o_dim; ++o) {
    double sb = 0.0;
    double* wrow = g.weight.data() + o * d;
    for (std::int64_t b = 0; b < batch; ++b) {
      const double gv = grad_out[b * o_dim + o];
      sb += gv;
      const double* xb = x.data() + b * d;
      for (std::int64_t i = 0; i < d; ++i) wrow[i] += gv * xb[i];
    }
    g.bias[o] = sb;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < batch; ++b) {
    double* gx = g.input.data() + b * d;
    for (std::int64_t o = 0; o < o_dim; ++o) {
      const double gv = grad_out[b * o_dim + o];
      const double* wr = weight.data() + o * d;
      for (std::int64_t i = 0; i < d; ++i) gx[i] += gv * wr[i];
    }
  }
  return g;
}

Tensor add_forward(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* dst = out.data();
  const std::int64_t n = a.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = pa[i] + pb[i];
  return out;
}

Tensor channel_concat(const std::vector<const Tensor*>& xs) {
  if (xs.empty()) throw ShapeError("channel_concat: no inputs");
  const Tensor& first = *xs.front();
  if (first.rank() != 4) throw ShapeError("channel_concat: inputs must be (B,C,H,W)");
  std::int64_t total_c = 0;
  for (const Tensor* t : xs) {
    if (t->rank() != 4 || t->dim(0) != first.dim(0) || t->dim(2) != first.dim(2) ||
        t->dim(3) != first.dim(3))
      throw ShapeError("channel_concat: inputs disagree outside the channel axis");
    total_c += t->dim(1);
  }
  const std::int64_t batch = first.dim(0), plane = first.dim(2) * first.dim(3);
  Tensor out({batch, total_c, first.dim(2), first.dim(3)});
  for (std::int64_t b = 0; b < batch; ++b) {
    std::int64_t c_off = 0;
    for (const Tensor* t : xs) {
      const std::int64_t c = t->dim(1);
      std::memcpy(out.data() + (b * total_c + c_off) * plane,
                  t->data() + b * c * plane,
                  sizeof(double) * static_cast<std::size_t>(c * plane));
      c_off += c;
    }
  }
  return out;
}

std::vector<Tensor> channel_split(const Tensor& x, const std::vector<std::int64_t>& channels) {
  std::int64_t total = 0;
  for (std::int64_t c : channels) total += c;
  if (x.rank() != 4 || x.dim(1) != total)
    throw ShapeError("channel_split: channel counts do not sum to input channels");
  const std::int64_t batch = x.dim(0), plane = x.dim(2) * x.dim(3);
  std::vector<Tensor> parts;
  parts.reserve(channels.size());
  std::int64_t c_off = 0;
  for (std::int64_t c : channels) {
    Tensor t({batch, c, x.dim(2), x.dim(3)});
    for (std::int64_t b = 0; b < batch; ++b)
      std::memcpy(t.data() + b * c * plane, x.data() + (b * total + c_off) * plane,
                  sizeof(double) * static_cast<std::size_t>(c * plane));
    c_off += c;
    parts.push_back(std::move(t));
  }
  return parts;
}

Tensor avgpool2_forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0)
    throw ShapeError("avgpool2: input must be (B,C,H,W) with even H and W");
  const std::int64_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out({batch, ch, h / 2, w / 2});
#pragma omp parallel for schedule(static)
  for (std::int64_t bc = 0; bc < batch * ch; ++bc) {
    const double* src = x.data() + bc * h * w;
    double* dst = out.data() + bc * (h / 2) * (w / 2);
    for (std::int64_t i = 0; i < h / 2; ++i)
      for (std::int64_t j = 0; j < w / 2; ++j)
        dst[i * (w / 2) + j] = 0.25 * (src[(2 * i) * w + 2 * j] + src[(2 * i) * w + 2 * j + 1] +
                                       src[(2 * i + 1) * w + 2 * j] +
                                       src[(2 * i + 1) * w + 2 * j + 1]);
  }
  return out;
}

Tensor avgpool2_backward(const Tensor& grad_out) {
  if (grad_out.rank() != 4) throw ShapeError("avgpool2_backward: grad must be (B,C,H,W)");
  const std::int64_t batch = grad_out.dim(0), ch = grad_out.dim(1);
  const std::int64_t oh = grad_out.dim(2), ow = grad_out.dim(3);
  Tensor out({batch, ch, oh * 2, ow * 2});
#pragma omp parallel for schedule(static)
  for (std::int64_t bc = 0; bc < batch * ch; ++bc) {
    const double* src = grad_out.data() + bc * oh * ow;
    double* dst = out.data() + bc * (oh * 2) * (ow * 2);
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < ow; ++j) {
        const double g = 0.25 * src[i * ow + j];
        dst[(2 * i) * (ow * 2) + 2 * j] = g;
        dst[(2 * i) * (ow * 2) + 2 * j + 1] = g;
        dst[(2 * i + 1) * (ow * 2) + 2 * j] = g;
        dst[(2 * i + 1) * (ow * 2) + 2 * j + 1] = g;
      }
  }
  return out;
}

}  // namespace vsr
