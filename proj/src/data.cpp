#include "vsr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "vsr/resize.hpp"

namespace vsr {

namespace {

struct Cosine {
  double fy, fx, phase, amp;
};

struct Disk {
  double cy, cx, radius, sign;
};

double smoothstep01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

std::vector<Tensor> synthetic_video(std::uint64_t seed, int num_frames, std::int64_t h,
                                    std::int64_t w, double motion_y, double motion_x) {
  if (h < 16 || w < 16) throw ConfigError("synthetic_video: frames must be at least 16x16");
  if (num_frames < 1) throw ConfigError("synthetic_video: need at least one frame");
  Rng rng(seed);

  // mostly long wavelengths, so bicubic degradation stays mild
  constexpr int kCosines = 8;
  std::vector<Cosine> cosines;
  for (int k = 0; k < kCosines; ++k) {
    const double theta = rng.uniform() * 2.0 * std::numbers::pi;
    const double lambda = 10.0 + 38.0 * std::pow(rng.uniform(), 1.5);
    const double freq = 2.0 * std::numbers::pi / lambda;
    const double amp = (0.30 / kCosines) * (0.3 + 0.7 * lambda / 48.0);
    cosines.push_back(
        {freq * std::sin(theta), freq * std::cos(theta), rng.uniform() * 2.0 * std::numbers::pi, amp});
  }
  constexpr int kDisks = 3;
  constexpr double kEdge = 2.5;  // px, smooth transition width
  std::vector<Disk> disks;
  for (int k = 0; k < kDisks; ++k) {
    disks.push_back({(0.2 + 0.6 * rng.uniform()) * static_cast<double>(h),
                     (0.2 + 0.6 * rng.uniform()) * static_cast<double>(w),
                     (0.12 + 0.13 * rng.uniform()) * static_cast<double>(std::min(h, w)),
                     k % 2 == 0 ? 0.12 : -0.12});
  }

  std::vector<Tensor> frames;
  frames.reserve(static_cast<std::size_t>(num_frames));
  for (int t = 0; t < num_frames; ++t) {
    Tensor frame({1, h, w});
#pragma omp parallel for schedule(static)
    for (std::int64_t y = 0; y < h; ++y) {
      double* row = frame.data() + y * w;
      const double yy = static_cast<double>(y) - motion_y * t;
      for (std::int64_t x = 0; x < w; ++x) {
        const double xx = static_cast<double>(x) - motion_x * t;
        double v = 0.5;
        for (const Cosine& c : cosines) v += c.amp * std::cos(c.fy * yy + c.fx * xx + c.phase);
        for (const Disk& d : disks) {
          const double dy = yy - d.cy, dx = xx - d.cx;
          const double dist = std::sqrt(dy * dy + dx * dx);
          v += d.sign * smoothstep01((d.radius - dist) / kEdge + 0.5);
        }
        row[x] = std::clamp(v, 0.0, 1.0);
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

FrameSequenceSample synthesize_pair(const std::vector<Tensor>& hr_frames, int scale) {
  if (hr_frames.size() != 5)
    throw ShapeError("synthesize_pair: expected 5 frames, got " +
                     std::to_string(hr_frames.size()));
  if (scale < 1 || scale > 4) throw ConfigError("synthesize_pair: scale must be in 1..4");
  for (const Tensor& f : hr_frames) {
    if (f.rank() != 3 || f.dim(0) != 1)
      throw ShapeError("synthesize_pair: frames must be (1,H,W)");
    check_same_shape(f, hr_frames[0], "synthesize_pair frames");
  }
  const std::int64_t h0 = hr_frames[0].dim(1), w0 = hr_frames[0].dim(2);
  const std::int64_t h = (h0 / scale) * scale, w = (w0 / scale) * scale;
  const std::int64_t oy = (h0 - h) / 2, ox = (w0 - w) / 2;

  auto center_crop = [&](const Tensor& f) {
    if (h == h0 && w == w0) return f;
    Tensor out({1, h, w});
    for (std::int64_t y = 0; y < h; ++y)
      std::memcpy(out.data() + y * w, f.data() + (oy + y) * w0 + ox,
                  sizeof(double) * static_cast<std::size_t>(w));
    return out;
  };

  FrameSequenceSample sample;
  sample.scale = scale;
  sample.lr_frames = Tensor({5, 1, h, w});
  for (std::size_t i = 0; i < 5; ++i) {
    Tensor hr = center_crop(hr_frames[i]);
    Tensor lr = scale == 1 ? hr
                           : imresize_bicubic(imresize_bicubic(hr, h / scale, w / scale, true),
                                              h, w, true);
    double* dst = sample.lr_frames.data() + static_cast<std::int64_t>(i) * h * w;
    for (std::int64_t j = 0; j < h * w; ++j) dst[j] = std::clamp(lr[j], 0.0, 1.0);
    if (i == 2) sample.hr_center = std::move(hr);
  }
  return sample;
}

std::vector<FrameSequenceSample> extract_patches(const FrameSequenceSample& full, int patch,
                                                 int stride) {
  const std::int64_t f = full.lr_frames.dim(0);
  const std::int64_t h = full.lr_frames.dim(2), w = full.lr_frames.dim(3);
  if (patch < 1 || patch > h || patch > w)
    throw ConfigError("extract_patches: patch " + std::to_string(patch) +
                      " larger than frame " + std::to_string(h) + "x" + std::to_string(w));
  if (stride < 1) throw ConfigError("extract_patches: stride must be >= 1");

  std::vector<FrameSequenceSample> out;
  int index = 0;
  for (std::int64_t i0 = 0; i0 + patch <= h; i0 += stride)
    for (std::int64_t j0 = 0; j0 + patch <= w; j0 += stride) {
      FrameSequenceSample s;
      s.scale = full.scale;
      s.source_id = full.source_id + "_p" + std::to_string(index++);
      s.lr_frames = Tensor({f, 1, patch, patch});
      s.hr_center = Tensor({1, patch, patch});
      for (std::int64_t fi = 0; fi < f; ++fi)
        for (std::int64_t y = 0; y < patch; ++y)
          std::memcpy(s.lr_frames.data() + (fi * patch + y) * patch,
                      full.lr_frames.data() + (fi * h + i0 + y) * w + j0,
                      sizeof(double) * static_cast<std::size_t>(patch));
      for (std::int64_t y = 0; y < patch; ++y)
        std::memcpy(s.hr_center.data() + y * patch,
                    full.hr_center.data() + (i0 + y) * w + j0,
                    sizeof(double) * static_cast<std::size_t>(patch));
      out.push_back(std::move(s));
    }
  return out;
}

FrameSequenceSample replicate_center(const FrameSequenceSample& s) {
  const std::int64_t f = s.lr_frames.dim(0);
  const std::int64_t plane = s.lr_frames.dim(2) * s.lr_frames.dim(3);
  FrameSequenceSample out = s;
  const double* center = s.lr_frames.data() + (f / 2) * plane;
  for (std::int64_t fi = 0; fi < f; ++fi)
    std::memcpy(out.lr_frames.data() + fi * plane, center,
                sizeof(double) * static_cast<std::size_t>(plane));
  return out;
}

Tensor rgb_to_luminance(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3)
    throw ShapeError("rgb_to_luminance: expected (3,H,W), got " + shape_str(rgb.shape()));
  const std::int64_t plane = rgb.dim(1) * rgb.dim(2);
  Tensor out({1, rgb.dim(1), rgb.dim(2)});
  for (std::int64_t i = 0; i < plane; ++i)
    out[i] = 0.299 * rgb[i] + 0.587 * rgb[plane + i] + 0.114 * rgb[2 * plane + i];
  return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw IoError("vsrd: truncated file " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32_block(std::ostream& out, const Tensor& t) {
  std::vector<float> buf(static_cast<std::size_t>(t.numel()));
  for (std::int64_t i = 0; i < t.numel(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(t[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void get_f32_block(std::istream& in, Tensor* t, const std::string& path) {
  std::vector<float> buf(static_cast<std::size_t>(t->numel()));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
    throw IoError("vsrd: truncated sample data in " + path);
  for (std::int64_t i = 0; i < t->numel(); ++i) (*t)[i] = buf[static_cast<std::size_t>(i)];
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& data,
                  const std::vector<std::pair<std::string, std::string>>& creation_params) {
  for (const FrameSequenceSample& s : data.samples) {
    if (s.lr_frames.dim(0) != data.frames || s.lr_frames.dim(2) != data.patch ||
        s.lr_frames.dim(3) != data.patch)
      throw ShapeError("vsrd: sample " + s.source_id + " does not match dataset geometry");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("vsrd: cannot write " + path);
  out.write("VSRD", 4);
  put_u32(out, 1);  // format version
  put_u32(out, static_cast<std::uint32_t>(data.scale));
  put_u32(out, static_cast<std::uint32_t>(data.patch));
  put_u32(out, static_cast<std::uint32_t>(data.frames));
  put_u32(out, static_cast<std::uint32_t>(data.samples.size()));
  for (const FrameSequenceSample& s : data.samples) {
    put_f32_block(out, s.lr_frames);
    put_f32_block(out, s.hr_center);
  }
  if (!out) throw IoError("vsrd: write failed for " + path);

  std::ofstream man(path + ".manifest");
  if (!man) throw IoError("vsrd: cannot write manifest for " + path);
  man << "vsrd manifest\n";
  man << "file: " << path << "\n";
  man << "scale: " << data.scale << "\n";
  man << "patch: " << data.patch << "\n";
  man << "frames: " << data.frames << "\n";
  man << "samples: " << data.samples.size() << "\n";
  for (const auto& [k, v] : creation_params) man << k << ": " << v << "\n";
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    man << i << ": " << data.samples[i].source_id << "\n";
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("vsrd: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "VSRD", 4) != 0)
    throw IoError("vsrd: bad magic in " + path);
  const std::uint32_t version = get_u32(in, path);
  if (version != 1) throw IoError("vsrd: unsupported version " + std::to_string(version));
  Dataset data;
  data.scale = static_cast<int>(get_u32(in, path));
  data.patch = static_cast<int>(get_u32(in, path));
  data.frames = static_cast<int>(get_u32(in, path));
  const std::uint32_t count = get_u32(in, path);
  if (data.scale < 1 || data.patch < 1 || data.frames < 1)
    throw IoError("vsrd: corrupt header in " + path);
  data.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FrameSequenceSample s;
    s.scale = data.scale;
    s.source_id = "s" + std::to_string(i);
    s.lr_frames = Tensor({data.frames, 1, data.patch, data.patch});
    s.hr_center = Tensor({1, data.patch, data.patch});
    get_f32_block(in, &s.lr_frames, path);
    get_f32_block(in, &s.hr_center, path);
    data.samples.push_back(std::move(s));
  }
  return data;
}

Dataset make_synthetic_dataset(std::uint64_t seed, int num_frames, std::int64_t size,
                               double motion_y, double motion_x, int scale, int patch,
                               int stride) {
  if (num_frames < 5) throw ConfigError("synth dataset: need at least 5 frames");
  std::vector<Tensor> video = synthetic_video(seed, num_frames, size, size, motion_y, motion_x);
  Dataset data;
  data.scale = scale;
  data.patch = patch;
  data.frames = 5;
  for (int t = 2; t + 2 < num_frames; ++t) {
    std::vector<Tensor> window(video.begin() + (t - 2), video.begin() + (t + 3));
    FrameSequenceSample full = synthesize_pair(window, scale);
    full.source_id = "w" + std::to_string(t);
    std::vector<FrameSequenceSample> patches = extract_patches(full, patch, stride);
    for (FrameSequenceSample& p : patches) data.samples.push_back(std::move(p));
  }
  return data;
}

}  // namespace vsr
