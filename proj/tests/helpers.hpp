#pragma once

// Shared test utilities: scratch directories under the test working dir,
// whole-file byte reads, and tensor comparison helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vsr/tensor.hpp"

namespace vsrtest {

// Fresh directory per test area; leftovers from the previous run are wiped at
// construction and kept after the run for post-mortem inspection.
struct ScratchDir {
  std::filesystem::path path;

  explicit ScratchDir(const std::string& name) : path(name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("test helper: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("test helper: cannot write " + path);
}

inline double max_abs_diff(const vsr::Tensor& a, const vsr::Tensor& b) {
  if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

// Bitwise equality, the standard for determinism and round-trip checks.
inline bool bit_equal(const vsr::Tensor& a, const vsr::Tensor& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data(), b.data(),
                     static_cast<std::size_t>(a.numel()) * sizeof(double)) == 0;
}

}  // namespace vsrtest
