#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "vsr/data.hpp"
#include "vsr/metrics.hpp"
#include "vsr/reference.hpp"
#include "vsr/resize.hpp"

using namespace vsr;

namespace {

Tensor textured_image(std::uint64_t seed, std::int64_t n) {
  return synthetic_video(seed, 1, n, n, 0.0, 0.0)[0];  // (1,n,n) in [0,1]
}

Tensor blur_via_resize(const Tensor& img, int factor) {
  const std::int64_t n = img.dim(1);
  Tensor small = imresize_bicubic(img, n / factor, n / factor, true);
  return imresize_bicubic(small, n, n, true);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr closed forms") {
  Tensor x = textured_image(31, 24);
  CHECK(std::isinf(psnr(x, x)));

  // uniform 0.1 offset -> MSE 0.01 -> exactly 20 dB
  Tensor shifted = x;
  for (std::int64_t i = 0; i < x.numel(); ++i) shifted[i] = x[i] + 0.1;
  CHECK(std::fabs(psnr(x, shifted) - 20.0) <= 1e-9);

  // the same geometry at peak 255
  Tensor x255 = x, s255 = x;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    x255[i] = x[i] * 255.0;
    s255[i] = x[i] * 255.0 + 25.5;
  }
  CHECK(std::fabs(psnr(x255, s255, 255.0) - 20.0) <= 1e-9);
}

TEST_CASE("psnr crop removes corrupted borders") {
  Tensor x = textured_image(32, 20);
  Tensor y = x;
  for (std::int64_t i = 0; i < 20; ++i) {
    y.at3(0, 0, i) = 0.0;
    y.at3(0, 19, i) = 1.0;
    y.at3(0, i, 0) = 1.0;
    y.at3(0, i, 19) = 0.0;
  }
  CHECK(std::isfinite(psnr(x, y)));
  CHECK(std::isinf(psnr(x, y, 1.0, 1)));

  // crop-consistency: pre-cropped inputs with crop 0 match the crop parameter
  Tensor xc({1, 16, 16}), yc({1, 16, 16});
  for (std::int64_t i = 0; i < 16; ++i)
    for (std::int64_t j = 0; j < 16; ++j) {
      xc.at3(0, i, j) = x.at3(0, i + 2, j + 2);
      yc.at3(0, i, j) = y.at3(0, i + 2, j + 2);
    }
  Tensor noisy = yc;
  noisy[40] += 0.25;  // make the MSE nonzero
  Tensor noisy_full = y;
  noisy_full.at3(0, 2 + 40 / 16, 2 + 40 % 16) += 0.25;
  CHECK(psnr(x, noisy_full, 1.0, 2) == doctest::Approx(psnr(xc, noisy, 1.0, 0)).epsilon(1e-12));

  CHECK_THROWS_AS(psnr(x, y, 1.0, 10), ConfigError);
}

TEST_CASE("psnr decreases monotonically with noise amplitude") {
  Tensor x = textured_image(33, 24);
  double prev = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.03, 0.09}) {
    Rng rng(99);
    Tensor y = x;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] += amp * rng.normal();
    const double p = psnr(x, y);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim identity and symmetry") {
  Tensor x = textured_image(34, 24);
  CHECK(ssim(x, x) == 1.0);

  Rng rng(5);
  Tensor y = x;
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] += 0.05 * rng.normal();
  CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-14));
  CHECK(ssim(x, y) < 1.0);
  CHECK(ssim(x, y) > -1.0);
}

TEST_CASE("ssim matches the direct windowed oracle") {
  double worst = 0.0;
  for (std::uint64_t seed : {41, 42, 43}) {
    Tensor x = textured_image(seed, 20);
    Rng rng(seed + 100);
    Tensor y = x;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] += 0.08 * rng.normal();
    worst = std::max(worst, std::fabs(ssim(x, y) - ref::ssim_direct(x, y, 1.0, 0)));
    worst = std::max(worst, std::fabs(ssim(x, y, 1.0, 2) - ref::ssim_direct(x, y, 1.0, 2)));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("ssim penalizes contrast inversion") {
  Tensor x = textured_image(44, 24);
  Tensor inv = x;
  for (std::int64_t i = 0; i < x.numel(); ++i) inv[i] = 1.0 - x[i];
  CHECK(ssim(x, inv) < 0.5);
}

TEST_CASE("ssim needs a full window after cropping") {
  Tensor x({1, 8, 8});
  CHECK_THROWS_AS(ssim(x, x), ConfigError);
  Tensor big = textured_image(45, 24);
  CHECK_THROWS_AS(ssim(big, big, 1.0, 8), ConfigError);
}

TEST_CASE("feature distance identity, symmetry, and blur monotonicity") {
  FeatureNet fn((FeatureNetSpec()));
  Tensor x = textured_image(46, 36);
  Tensor xb = x.reshaped({1, 1, 36, 36});
  CHECK(feature_distance(xb, xb, fn) == 0.0);

  Tensor mild = blur_via_resize(x, 2).reshaped({1, 1, 36, 36});
  Tensor heavy = blur_via_resize(x, 4).reshaped({1, 1, 36, 36});
  const double d_mild = feature_distance(xb, mild, fn);
  const double d_heavy = feature_distance(xb, heavy, fn);
  CHECK(d_mild > 0.0);
  CHECK(d_mild < d_heavy);
  CHECK(feature_distance(xb, mild, fn) == doctest::Approx(feature_distance(mild, xb, fn)).epsilon(1e-14));
}

TEST_CASE("eval report aggregates and serializes") {
  EvalReport rep;
  rep.rows = {{"a", 30.0, 0.9, 0.1}, {"b", 34.0, 0.94, 0.3}};
  rep.crop = 2;
  rep.scale = 2;
  rep.model_id = "unit";
  rep.finalize();
  CHECK(rep.mean_psnr == doctest::Approx(32.0));
  CHECK(rep.mean_ssim == doctest::Approx(0.92));
  CHECK(rep.mean_featdist == doctest::Approx(0.2));

  const std::string text = rep.to_text();
  CHECK(text.find("proxy") != std::string::npos);  // the metric is labeled, not claimed

  const std::string csv = rep.to_csv();
  CHECK(csv.find("frame_id,psnr,ssim,featdist") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + two rows
}

}  // TEST_SUITE
