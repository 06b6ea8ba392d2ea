#pragma once

// Dataset synthesis: seeded synthetic HR video, bicubic LR/HR pair synthesis
// (downscale with antialias, upscale back), aligned patch extraction, the
// center-frame-replication harness, and the packed "VSRD" dataset container.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vsr/tensor.hpp"

namespace vsr {

struct FrameSequenceSample {
  Tensor lr_frames;  // (F,1,N,N), values in [0,1]
  Tensor hr_center;  // (1,N,N)
  int scale = 2;
  std::string source_id;
};

// Deterministic textured frames (1,H,W) in [0,1]: band-limited cosine mixture
// plus smooth-edged disks, all evaluated at coordinates translated by
// (motion_y, motion_x) pixels per frame, so motion is exact by construction.
std::vector<Tensor> synthetic_video(std::uint64_t seed, int num_frames, std::int64_t h,
                                    std::int64_t w, double motion_y, double motion_x);

// Five HR frames -> full-frame sample: each frame bicubically downscaled by
// 1/scale (antialias on) then upscaled back; the center HR frame is kept
// pristine. Frames whose dims are not divisible by scale are center-cropped.
FrameSequenceSample synthesize_pair(const std::vector<Tensor>& hr_frames, int scale);

// Aligned HR/LR crops on a regular grid; partial border patches are discarded.
std::vector<FrameSequenceSample> extract_patches(const FrameSequenceSample& full, int patch,
                                                 int stride);

// Y = {y_t, y_t, y_t, y_t, y_t}; hr_center unchanged.
FrameSequenceSample replicate_center(const FrameSequenceSample& s);

// ITU-R BT.601 luma. rgb: (3,H,W) in [0,1] -> (1,H,W).
Tensor rgb_to_luminance(const Tensor& rgb);

struct Dataset {
  int scale = 2;
  int patch = 36;
  int frames = 5;
  std::vector<FrameSequenceSample> samples;
};

// Packed binary container (magic "VSRD") plus a human-readable manifest
// written alongside as <path>.manifest.
void save_dataset(const std::string& path, const Dataset& data,
                  const std::vector<std::pair<std::string, std::string>>& creation_params);
Dataset load_dataset(const std::string& path);

// The synth-data pipeline: sliding 5-frame windows over a synthetic video,
// pair synthesis, patch extraction.
Dataset make_synthetic_dataset(std::uint64_t seed, int num_frames, std::int64_t size,
                               double motion_y, double motion_x, int scale, int patch,
                               int stride);

}  // namespace vsr
