#pragma once

// Binary Netpbm I/O: PGM (P5) grayscale and PPM (P6) color, 8- and 16-bit,
// sample values mapped linearly to [0,1].

#include <string>

#include "vsr/tensor.hpp"

namespace vsr {

// Returns (1,H,W) for PGM, (3,H,W) for PPM.
Tensor read_pnm(const std::string& path);

// image (1,H,W) or (H,W), values clamped to [0,1] on write.
void write_pgm(const std::string& path, const Tensor& image, int maxval = 65535);

// image (3,H,W).
void write_ppm(const std::string& path, const Tensor& image, int maxval = 255);

}  // namespace vsr
