#include "vsr/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace vsr {

namespace {

void check_image_pair(const Tensor& x, const Tensor& xhat, int crop, const char* who) {
  check_same_shape(x, xhat, who);
  if (x.rank() < 2) throw ShapeError(std::string(who) + ": need at least (H,W)");
  const std::int64_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  if (crop < 0 || 2 * crop >= std::min(h, w))
    throw ConfigError(std::string(who) + ": crop leaves no pixels");
}

}  // namespace

double psnr(const Tensor& x, const Tensor& xhat, double peak, int crop) {
  check_image_pair(x, xhat, crop, "psnr");
  if (peak <= 0.0) throw ConfigError("psnr: peak must be > 0");
  const std::int64_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  const std::int64_t slices = x.numel() / (h * w);
  double se = 0.0;
  std::int64_t count = 0;
  for (std::int64_t s = 0; s < slices; ++s) {
    const double* px = x.data() + s * h * w;
    const double* py = xhat.data() + s * h * w;
    for (std::int64_t i = crop; i < h - crop; ++i)
      for (std::int64_t j = crop; j < w - crop; ++j) {
        const double d = px[i * w + j] - py[i * w + j];
        se += d * d;
        ++count;
      }
  }
  const double mse = se / static_cast<double>(count);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& x, const Tensor& xhat, double peak, int crop) {
  check_image_pair(x, xhat, crop, "ssim");
  const std::int64_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  const std::int64_t ch = h - 2 * crop, cw = w - 2 * crop;
  if (ch < 11 || cw < 11) throw ConfigError("ssim: image smaller than 11x11 after crop");
  const std::int64_t slices = x.numel() / (h * w);

  // 1-D Gaussian, sigma 1.5; the 2-D window is its outer product, total sum 1
  double g1[11];
  double gs = 0.0;
  for (int a = 0; a < 11; ++a) {
    const double d = a - 5;
    g1[a] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gs += g1[a];
  }
  for (double& v : g1) v /= gs;

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const std::int64_t oh = ch - 10, ow = cw - 10;

  // separable filtering of x, y, x^2, y^2, xy over the cropped region
  const std::int64_t fields = 5;
  std::vector<double> rowpass(static_cast<std::size_t>(fields * oh * cw));
  double acc = 0.0;
  for (std::int64_t s = 0; s < slices; ++s) {
    const double* px = x.data() + s * h * w;
    const double* py = xhat.data() + s * h * w;
    auto at = [&](const double* p, std::int64_t i, std::int64_t j) {
      return p[(crop + i) * w + (crop + j)];
    };
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < cw; ++j) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (int a = 0; a < 11; ++a) {
          const double xv = at(px, i + a, j), yv = at(py, i + a, j);
          mx += g1[a] * xv;
          my += g1[a] * yv;
          mxx += g1[a] * xv * xv;
          myy += g1[a] * yv * yv;
          mxy += g1[a] * xv * yv;
        }
        double* cell = rowpass.data() + (i * cw + j) * fields;
        cell[0] = mx;
        cell[1] = my;
        cell[2] = mxx;
        cell[3] = myy;
        cell[4] = mxy;
      }
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < ow; ++j) {
        double m[5] = {0, 0, 0, 0, 0};
        for (int b = 0; b < 11; ++b) {
          const double* cell = rowpass.data() + (i * cw + j + b) * fields;
          for (int q = 0; q < 5; ++q) m[q] += g1[b] * cell[q];
        }
        const double mx = m[0], my = m[1];
        const double vx = m[2] - mx * mx;
        const double vy = m[3] - my * my;
        const double cov = m[4] - mx * my;
        // With x == xhat the numerator and denominator are bitwise equal, so
        // each window contributes exactly 1.0; this file is built without FP
        // contraction (see src/CMakeLists.txt) to keep that rounding symmetry.
        acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
  }
  return acc / static_cast<double>(slices * oh * ow);
}

double feature_distance(const Tensor& x, const Tensor& xhat, const FeatureNet& fn) {
  check_same_shape(x, xhat, "feature_distance");
  Tensor a = x, b = xhat;
  if (a.rank() == 2) {
    a = a.reshaped({1, 1, a.dim(0), a.dim(1)});
    b = b.reshaped({1, 1, x.dim(0), x.dim(1)});
  } else if (a.rank() == 3) {
    a = a.reshaped({1, a.dim(0), a.dim(1), a.dim(2)});
    b = b.reshaped({1, x.dim(0), x.dim(1), x.dim(2)});
  }
  std::vector<Tensor> fx = fn.forward(a);
  std::vector<Tensor> fy = fn.forward(b);

  double total = 0.0;
  for (std::size_t t = 0; t < fx.size(); ++t) {
    const Tensor& p = fx[t];
    const Tensor& q = fy[t];
    const std::int64_t batch = p.dim(0), c = p.dim(1), plane = p.dim(2) * p.dim(3);
    double tap_acc = 0.0;
    for (std::int64_t bi = 0; bi < batch; ++bi)
      for (std::int64_t s = 0; s < plane; ++s) {
        double np = 0.0, nq = 0.0;
        for (std::int64_t ci = 0; ci < c; ++ci) {
          const double pv = p[(bi * c + ci) * plane + s];
          const double qv = q[(bi * c + ci) * plane + s];
          np += pv * pv;
          nq += qv * qv;
        }
        np = std::sqrt(np);
        nq = std::sqrt(nq);
        for (std::int64_t ci = 0; ci < c; ++ci) {
          const double pv = p[(bi * c + ci) * plane + s] / (np > 1e-12 ? np : 1.0);
          const double qv = q[(bi * c + ci) * plane + s] / (nq > 1e-12 ? nq : 1.0);
          tap_acc += (pv - qv) * (pv - qv);
        }
      }
    total += tap_acc / static_cast<double>(batch * c * plane);
  }
  return total / static_cast<double>(fx.size());
}

void EvalReport::finalize() {
  mean_psnr = mean_ssim = mean_featdist = 0.0;
  if (rows.empty()) return;
  for (const EvalRow& r : rows) {
    mean_psnr += r.psnr;
    mean_ssim += r.ssim;
    mean_featdist += r.featdist;
  }
  const double n = static_cast<double>(rows.size());
  mean_psnr /= n;
  mean_ssim /= n;
  mean_featdist /= n;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "model: " << model_id << "\n";
  os << "scale: " << scale << "  crop: " << crop
     << (center_frame_only ? "  (center-frame-only)" : "") << "\n";
  os << "samples: " << rows.size() << "\n";
  os << "mean PSNR: " << mean_psnr << " dB\n";
  os << "mean SSIM: " << mean_ssim << "\n";
  os << "mean feature_distance (proxy): " << mean_featdist << "\n";
  return os.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "frame_id,psnr,ssim,featdist\n";
  for (const EvalRow& r : rows)
    os << r.frame_id << "," << r.psnr << "," << r.ssim << "," << r.featdist << "\n";
  return os.str();
}

}  // namespace vsr
