#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "vsr/reference.hpp"
#include "vsr/resize.hpp"

using namespace vsr;
using vsrtest::bit_equal;
using vsrtest::max_abs_diff;

TEST_SUITE("resize") {

TEST_CASE("cubic kernel closed-form values") {
  CHECK(cubic_kernel(0.0) == 1.0);
  CHECK(cubic_kernel(1.0) == 0.0);
  CHECK(cubic_kernel(2.0) == 0.0);
  CHECK(cubic_kernel(0.5) == 0.5625);
  CHECK(cubic_kernel(1.5) == -0.0625);
  CHECK(cubic_kernel(2.5) == 0.0);
  CHECK(cubic_kernel(-0.5) == cubic_kernel(0.5));
  CHECK(cubic_kernel(-1.5) == cubic_kernel(1.5));
}

TEST_CASE("identity resize is bit-exact") {
  Rng rng(11);
  Tensor img = randn({2, 9, 13}, rng);
  CHECK(bit_equal(imresize_bicubic(img, 9, 13, true), img));
  CHECK(bit_equal(imresize_bicubic(img, 9, 13, false), img));
}

TEST_CASE("constant images are fixed points at every size pair") {
  // renormalized weight rows sum to 1, so constants survive up to rounding
  double worst = 0.0;
  const std::int64_t sizes[][2] = {{8, 8}, {24, 24}, {7, 17}, {16, 5}, {31, 31}};
  for (double c : {0.3, 1.0, 0.123456789}) {
    Tensor img = Tensor::full({1, 16, 13}, c);
    for (auto& hw : sizes)
      for (bool aa : {true, false}) {
        Tensor out = imresize_bicubic(img, hw[0], hw[1], aa);
        for (std::int64_t i = 0; i < out.numel(); ++i)
          worst = std::max(worst, std::fabs(out[i] - c));
      }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("separable path matches the direct-summation oracle") {
  Rng rng(42);
  double worst = 0.0;
  struct Case {
    std::int64_t h, w, oh, ow;
    bool aa;
  };
  const Case cases[] = {
      {16, 16, 8, 8, true},    // the classic antialiased downscale
      {16, 16, 8, 8, false},   // same without antialias
      {16, 16, 24, 24, true},  // upscale
      {13, 9, 7, 17, true},    // mixed down/up, odd sizes
      {12, 18, 5, 5, true},    // strong downscale, wide dilation
      {8, 8, 36, 36, false},   // large upscale
  };
  for (const Case& c : cases) {
    Tensor img = randn({2, c.h, c.w}, rng, 0.3);
    Tensor fast = imresize_bicubic(img, c.oh, c.ow, c.aa);
    Tensor direct = ref::imresize_direct(img, c.oh, c.ow, c.aa);
    REQUIRE(fast.same_shape(direct));
    worst = std::max(worst, max_abs_diff(fast, direct));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("antialias dilates only the downscaling axes") {
  Rng rng(13);
  Tensor img = randn({1, 16, 16}, rng, 0.3);

  // pure upscale: the flag must not change anything
  CHECK(bit_equal(imresize_bicubic(img, 24, 24, true), imresize_bicubic(img, 24, 24, false)));

  // downscale: the flag must matter
  CHECK(max_abs_diff(imresize_bicubic(img, 8, 8, true), imresize_bicubic(img, 8, 8, false)) >
        1e-6);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(imresize_bicubic(Tensor({2, 3}), 4, 4, true), ShapeError);
  CHECK_THROWS_AS(imresize_bicubic(Tensor({1, 4, 4}), 0, 4, true), ShapeError);
}

}  // TEST_SUITE
