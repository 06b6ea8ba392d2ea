#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "vsr/data.hpp"
#include "vsr/image_io.hpp"
#include "vsr/metrics.hpp"

using namespace vsr;
using vsrtest::bit_equal;
using vsrtest::max_abs_diff;
using vsrtest::read_file;

TEST_SUITE("data") {

TEST_CASE("synthetic video is deterministic and in range") {
  std::vector<Tensor> a = synthetic_video(7, 4, 24, 20, 0.5, -0.25);
  std::vector<Tensor> b = synthetic_video(7, 4, 24, 20, 0.5, -0.25);
  REQUIRE(a.size() == 4);
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(a[f].shape() == Shape{1, 24, 20});
    CHECK(bit_equal(a[f], b[f]));
    for (std::int64_t i = 0; i < a[f].numel(); ++i) {
      CHECK(a[f][i] >= 0.0);
      CHECK(a[f][i] <= 1.0);
    }
  }
  std::vector<Tensor> c = synthetic_video(8, 4, 24, 20, 0.5, -0.25);
  CHECK_FALSE(bit_equal(a[0], c[0]));
}

TEST_CASE("zero motion freezes the video") {
  std::vector<Tensor> v = synthetic_video(3, 5, 16, 16, 0.0, 0.0);
  for (std::size_t f = 1; f < v.size(); ++f) CHECK(bit_equal(v[f], v[0]));
}

TEST_CASE("integer motion shifts frames by whole pixels") {
  // the pattern is evaluated at translated coordinates, so a (1,0) velocity
  // makes frame k+1 at (y,x) reproduce frame k at (y-1,x)
  std::vector<Tensor> v = synthetic_video(5, 3, 20, 18, 1.0, 0.0);
  double worst = 0.0;
  for (std::size_t f = 0; f + 1 < v.size(); ++f)
    for (std::int64_t y = 1; y < 20; ++y)
      for (std::int64_t x = 0; x < 18; ++x)
        worst = std::max(worst, std::fabs(v[f + 1].at3(0, y, x) - v[f].at3(0, y - 1, x)));
  CHECK(worst <= 1e-10);
}

TEST_CASE("synthetic video validation") {
  CHECK_THROWS_AS(synthetic_video(1, 3, 8, 16, 0, 0), ConfigError);
  CHECK_THROWS_AS(synthetic_video(1, 0, 16, 16, 0, 0), ConfigError);
}

TEST_CASE("synthesize_pair keeps the HR center pristine") {
  std::vector<Tensor> v = synthetic_video(9, 5, 36, 36, 0.3, 0.7);
  FrameSequenceSample s = synthesize_pair(v, 2);
  CHECK(s.scale == 2);
  CHECK(s.lr_frames.shape() == Shape{5, 1, 36, 36});
  CHECK(s.hr_center.shape() == Shape{1, 36, 36});
  CHECK(max_abs_diff(s.hr_center, v[2]) == 0.0);

  // degraded frames must actually differ from the originals
  Tensor lr_center = Tensor::zeros({1, 36, 36});
  std::copy(s.lr_frames.data() + 2 * 36 * 36, s.lr_frames.data() + 3 * 36 * 36,
            lr_center.data());
  CHECK(max_abs_diff(lr_center, v[2]) > 1e-3);
}

TEST_CASE("synthesize_pair constants and identity scale") {
  std::vector<Tensor> con(5, Tensor::full({1, 20, 20}, 0.42));
  FrameSequenceSample s = synthesize_pair(con, 2);
  for (std::int64_t i = 0; i < s.lr_frames.numel(); ++i)
    CHECK(std::fabs(s.lr_frames[i] - 0.42) <= 1e-12);

  std::vector<Tensor> v = synthetic_video(4, 5, 24, 24, 0.2, 0.1);
  FrameSequenceSample id = synthesize_pair(v, 1);
  for (int f = 0; f < 5; ++f) {
    Tensor fr = Tensor::zeros({1, 24, 24});
    std::copy(id.lr_frames.data() + f * 24 * 24, id.lr_frames.data() + (f + 1) * 24 * 24,
              fr.data());
    CHECK(bit_equal(fr, v[static_cast<std::size_t>(f)]));
  }
}

TEST_CASE("synthesize_pair degrades more at larger scales") {
  std::vector<Tensor> v = synthetic_video(21, 5, 48, 48, 0.4, 0.2);
  FrameSequenceSample s2 = synthesize_pair(v, 2);
  FrameSequenceSample s4 = synthesize_pair(v, 4);
  Tensor lr2 = Tensor::zeros({1, 48, 48}), lr4 = Tensor::zeros({1, 48, 48});
  std::copy(s2.lr_frames.data() + 2 * 48 * 48, s2.lr_frames.data() + 3 * 48 * 48, lr2.data());
  std::copy(s4.lr_frames.data() + 2 * 48 * 48, s4.lr_frames.data() + 3 * 48 * 48, lr4.data());
  const double p2 = psnr(s2.hr_center, lr2);
  const double p4 = psnr(s4.hr_center, lr4);
  CHECK(std::isfinite(p2));
  CHECK(std::isfinite(p4));
  CHECK(p4 < p2);
}

TEST_CASE("synthesize_pair crops to a multiple of the scale") {
  std::vector<Tensor> v = synthetic_video(2, 5, 23, 17, 0.0, 0.0);
  FrameSequenceSample s = synthesize_pair(v, 4);
  CHECK(s.lr_frames.shape() == Shape{5, 1, 20, 16});
  CHECK(s.hr_center.shape() == Shape{1, 20, 16});

  CHECK_THROWS_AS(synthesize_pair({v[0], v[1]}, 2), ShapeError);
}

TEST_CASE("patch extraction grid arithmetic") {
  std::vector<Tensor> v = synthetic_video(6, 5, 72, 72, 0.5, 0.5);
  FrameSequenceSample full = synthesize_pair(v, 2);
  CHECK(extract_patches(full, 36, 36).size() == 4);
  CHECK(extract_patches(full, 36, 18).size() == 9);

  // partial border patches are discarded
  std::vector<Tensor> odd = synthetic_video(6, 5, 70, 70, 0.5, 0.5);
  FrameSequenceSample f70 = synthesize_pair(odd, 2);
  CHECK(extract_patches(f70, 36, 36).size() == 1);

  CHECK_THROWS_AS(extract_patches(f70, 80, 36), ConfigError);
}

TEST_CASE("extracted HR patches are exact crops") {
  std::vector<Tensor> v = synthetic_video(14, 5, 72, 72, 0.3, -0.6);
  FrameSequenceSample full = synthesize_pair(v, 2);
  std::vector<FrameSequenceSample> patches = extract_patches(full, 36, 36);
  REQUIRE(patches.size() == 4);
  // patch grid is row-major: offsets (0,0), (0,36), (36,0), (36,36)
  const std::int64_t offs[4][2] = {{0, 0}, {0, 36}, {36, 0}, {36, 36}};
  for (int p = 0; p < 4; ++p) {
    const FrameSequenceSample& s = patches[static_cast<std::size_t>(p)];
    CHECK(s.hr_center.shape() == Shape{1, 36, 36});
    CHECK(s.scale == full.scale);
    for (std::int64_t y = 0; y < 36; ++y)
      for (std::int64_t x = 0; x < 36; ++x) {
        CHECK(s.hr_center.at3(0, y, x) == full.hr_center.at3(0, offs[p][0] + y, offs[p][1] + x));
        CHECK(s.lr_frames.at(2, 0, y, x) ==
              full.lr_frames.at(2, 0, offs[p][0] + y, offs[p][1] + x));
      }
  }
}

TEST_CASE("replicate_center") {
  std::vector<Tensor> v = synthetic_video(10, 5, 24, 24, 0.8, 0.0);
  FrameSequenceSample s = synthesize_pair(v, 2);
  FrameSequenceSample r = replicate_center(s);

  const std::int64_t fsz = 24 * 24;
  for (int f = 0; f < 5; ++f)
    for (std::int64_t i = 0; i < fsz; ++i)
      CHECK(r.lr_frames[f * fsz + i] == s.lr_frames[2 * fsz + i]);
  CHECK(bit_equal(r.hr_center, s.hr_center));

  FrameSequenceSample rr = replicate_center(r);
  CHECK(bit_equal(rr.lr_frames, r.lr_frames));
}

TEST_CASE("luminance conversion") {
  Tensor white = Tensor::full({3, 2, 2}, 1.0);
  Tensor yw = rgb_to_luminance(white);
  CHECK(yw.shape() == Shape{1, 2, 2});
  CHECK(yw[0] == doctest::Approx(1.0).epsilon(1e-12));

  Tensor green({3, 1, 1});
  green.at3(1, 0, 0) = 1.0;
  CHECK(rgb_to_luminance(green)[0] == 0.587);

  Tensor gray = Tensor::full({3, 1, 1}, 0.25);
  CHECK(rgb_to_luminance(gray)[0] == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(rgb_to_luminance(Tensor({1, 2, 2})), ShapeError);
}

TEST_CASE("synthetic dataset fixture geometry") {
  // 16 frames -> 12 five-frame windows; 72/36 grid -> 4 patches per window
  Dataset ds = make_synthetic_dataset(3, 16, 72, 0.6, -0.35, 2, 36, 36);
  CHECK(ds.samples.size() == 48);
  CHECK(ds.scale == 2);
  CHECK(ds.patch == 36);
  CHECK(ds.frames == 5);
  for (const FrameSequenceSample& s : ds.samples) {
    CHECK(s.lr_frames.shape() == Shape{5, 1, 36, 36});
    CHECK(s.hr_center.shape() == Shape{1, 36, 36});
  }

  Dataset again = make_synthetic_dataset(3, 16, 72, 0.6, -0.35, 2, 36, 36);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(bit_equal(ds.samples[i].lr_frames, again.samples[i].lr_frames));
    CHECK(bit_equal(ds.samples[i].hr_center, again.samples[i].hr_center));
  }

  CHECK_THROWS_AS(make_synthetic_dataset(3, 4, 72, 0.0, 0.0, 2, 36, 36), ConfigError);
}

TEST_CASE("vsrd container round-trips byte-identically") {
  vsrtest::ScratchDir dir("data_scratch");
  Dataset ds = make_synthetic_dataset(5, 6, 40, 0.4, 0.1, 2, 20, 20);
  REQUIRE(ds.samples.size() == 8);

  const std::string p1 = dir.file("a.vsrd"), p2 = dir.file("b.vsrd");
  save_dataset(p1, ds, {{"seed", "5"}, {"note", "unit fixture"}});
  Dataset loaded = load_dataset(p1);
  CHECK(loaded.scale == ds.scale);
  CHECK(loaded.patch == ds.patch);
  CHECK(loaded.frames == ds.frames);
  REQUIRE(loaded.samples.size() == ds.samples.size());

  // samples are stored as 32-bit floats; the loaded values must survive a
  // second save bit-for-bit
  save_dataset(p2, loaded, {});
  Dataset reloaded = load_dataset(p2);
  for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
    CHECK(bit_equal(loaded.samples[i].lr_frames, reloaded.samples[i].lr_frames));
    CHECK(bit_equal(loaded.samples[i].hr_center, reloaded.samples[i].hr_center));
  }
  const std::string b2 = read_file(p2), p2b = dir.file("c.vsrd");
  save_dataset(p2b, reloaded, {});
  CHECK(read_file(p2b) == b2);

  // quantization error of the float payload stays below one float ulp scale
  for (std::size_t i = 0; i < loaded.samples.size(); ++i)
    CHECK(max_abs_diff(loaded.samples[i].hr_center, ds.samples[i].hr_center) < 1e-7);

  // manifest is human-readable and names the sample count
  const std::string manifest = read_file(p1 + ".manifest");
  CHECK(manifest.find('8') != std::string::npos);
}

TEST_CASE("vsrd rejects damaged files") {
  vsrtest::ScratchDir dir("data_scratch_bad");
  Dataset ds = make_synthetic_dataset(5, 5, 32, 0.0, 0.0, 2, 16, 16);
  const std::string good = dir.file("good.vsrd");
  save_dataset(good, ds, {});

  std::string bytes = read_file(good);
  vsrtest::write_file(dir.file("magic.vsrd"), "XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(load_dataset(dir.file("magic.vsrd")), IoError);

  vsrtest::write_file(dir.file("short.vsrd"), bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_dataset(dir.file("short.vsrd")), IoError);

  CHECK_THROWS_AS(load_dataset(dir.file("missing.vsrd")), IoError);
}

TEST_CASE("pnm image round-trips") {
  vsrtest::ScratchDir dir("pnm_scratch");
  Rng rng(17);

  Tensor gray = randn({1, 9, 7}, rng, 0.2);
  for (std::int64_t i = 0; i < gray.numel(); ++i) gray[i] = std::clamp(gray[i] + 0.5, 0.0, 1.0);
  const std::string pgm = dir.file("img.pgm");
  write_pgm(pgm, gray, 65535);
  Tensor back = read_pnm(pgm);
  REQUIRE(back.shape() == gray.shape());
  CHECK(max_abs_diff(back, gray) <= 0.5 / 65535.0 + 1e-12);

  Tensor rgb = randn({3, 5, 6}, rng, 0.2);
  for (std::int64_t i = 0; i < rgb.numel(); ++i) rgb[i] = std::clamp(rgb[i] + 0.5, 0.0, 1.0);
  const std::string ppm = dir.file("img.ppm");
  write_ppm(ppm, rgb, 255);
  Tensor rgb_back = read_pnm(ppm);
  REQUIRE(rgb_back.shape() == rgb.shape());
  CHECK(max_abs_diff(rgb_back, rgb) <= 0.5 / 255.0 + 1e-12);

  CHECK_THROWS_AS(read_pnm(dir.file("nope.pgm")), IoError);
}

}  // TEST_SUITE
