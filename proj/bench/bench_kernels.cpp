// Micro-benchmark comparing the OpenMP-parallel kernels against the serial
// reference implementations they are tested against. Not a correctness tool
// (the test suites own that); this reports wall time, throughput, and the
// speedup of the production path at realistic layer shapes.
//
//   ./bench/vsr_bench [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "vsr/kernels.hpp"
#include "vsr/reference.hpp"
#include "vsr/resize.hpp"
#include "vsr/tensor.hpp"

using namespace vsr;

namespace {

double time_best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void print_row(const std::string& name, double gflop, double fast_s, double slow_s) {
  std::printf("%-34s %9.2f ms %9.2f ms %8.2f GF/s %7.2fx\n", name.c_str(), fast_s * 1e3,
              slow_s * 1e3, gflop / fast_s, slow_s / fast_s);
}

void bench_conv(int repeats, std::int64_t b, std::int64_t cin, std::int64_t cout,
                std::int64_t n, int k) {
  Rng rng(1);
  Tensor input = randn({b, cin, n, n}, rng);
  Tensor weight = randn({cout, cin, k, k}, rng, 0.1);
  Tensor bias = randn({cout}, rng, 0.1);
  const int pad = k / 2;

  Tensor out;
  const double fast_s = time_best_of(repeats, [&] {
    out = conv2d_forward(input, weight, bias, 1, pad);
  });
  Tensor ref_out;
  const double slow_s = time_best_of(repeats, [&] {
    ref_out = ref::conv2d_forward(input, weight, bias, 1, pad);
  });

  // 2 flops per multiply-accumulate over every output element and kernel tap
  const double gflop = 2.0 * static_cast<double>(out.numel()) *
                       static_cast<double>(cin * k * k) * 1e-9;
  char name[96];
  std::snprintf(name, sizeof name, "conv2d %lldx%lldx%lldx%lld k%d -> %lld",
                static_cast<long long>(b), static_cast<long long>(cin),
                static_cast<long long>(n), static_cast<long long>(n), k,
                static_cast<long long>(cout));
  print_row(name, gflop, fast_s, slow_s);
}

void bench_conv_backward(int repeats, std::int64_t b, std::int64_t c, std::int64_t n, int k) {
  Rng rng(2);
  Tensor input = randn({b, c, n, n}, rng);
  Tensor weight = randn({c, c, k, k}, rng, 0.1);
  Tensor gout = randn({b, c, n, n}, rng);
  const int pad = k / 2;

  const double fast_s = time_best_of(repeats, [&] {
    conv2d_backward(gout, input, weight, 1, pad);
  });
  const double slow_s = time_best_of(repeats, [&] {
    ref::conv2d_backward(gout, input, weight, 1, pad);
  });

  // backward does roughly 2x the forward multiply-accumulate work
  const double gflop = 4.0 * static_cast<double>(gout.numel()) *
                       static_cast<double>(c * k * k) * 1e-9;
  char name[96];
  std::snprintf(name, sizeof name, "conv2d backward %lldx%lldx%lldx%lld k%d",
                static_cast<long long>(b), static_cast<long long>(c),
                static_cast<long long>(n), static_cast<long long>(n), k);
  print_row(name, gflop, fast_s, slow_s);
}

void bench_resize(int repeats, std::int64_t h, std::int64_t w, std::int64_t oh,
                  std::int64_t ow) {
  Rng rng(3);
  Tensor img({1, h, w});
  for (std::int64_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform();

  const double fast_s = time_best_of(repeats, [&] { imresize_bicubic(img, oh, ow, true); });
  const double slow_s = time_best_of(repeats, [&] { ref::imresize_direct(img, oh, ow, true); });

  // separable path: 4-tap rows then 4-tap columns (antialias widens taps on
  // downscale; this is a nominal figure, the speedup column is the point)
  const double gflop = 2.0 * 4.0 * static_cast<double>(oh * w + oh * ow) * 1e-9;
  char name[96];
  std::snprintf(name, sizeof name, "imresize %lldx%lld -> %lldx%lld",
                static_cast<long long>(h), static_cast<long long>(w),
                static_cast<long long>(oh), static_cast<long long>(ow));
  print_row(name, gflop, fast_s, slow_s);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  std::printf("kernel benchmark: best of %d runs, %d thread(s)\n", repeats,
              omp_get_max_threads());
  std::printf("%-34s %12s %12s %13s %8s\n", "case", "parallel", "serial ref", "throughput",
              "speedup");

  bench_conv(repeats, 8, 64, 64, 36, 3);    // residual-block body at batch 8
  bench_conv(repeats, 8, 320, 64, 36, 3);   // fusion layer after the concat
  bench_conv(repeats, 1, 64, 64, 128, 3);   // single large frame
  bench_conv(repeats, 8, 64, 64, 36, 1);    // pointwise
  bench_conv_backward(repeats, 8, 64, 36, 3);
  bench_resize(repeats, 512, 512, 256, 256);
  bench_resize(repeats, 256, 256, 512, 512);
  bench_resize(repeats, 720, 480, 360, 240);
  return 0;
}
