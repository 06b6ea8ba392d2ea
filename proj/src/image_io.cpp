#include "vsr/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <vector>

namespace vsr {

namespace {

// next whitespace-delimited token, skipping '#' comments
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw IoError("pnm: truncated header in " + path);
  return tok;
}

std::int64_t parse_int(const std::string& tok, const std::string& path) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError("pnm: bad header field '" + tok + "' in " + path);
  }
}

void write_samples(std::ostream& out, const Tensor& image, std::int64_t channels,
                   std::int64_t plane, int maxval) {
  // interleaved channels, row-major, big-endian for 16-bit (Netpbm convention)
  std::vector<unsigned char> buf;
  buf.reserve(static_cast<std::size_t>(plane * channels * (maxval > 255 ? 2 : 1)));
  for (std::int64_t i = 0; i < plane; ++i)
    for (std::int64_t c = 0; c < channels; ++c) {
      const double v = std::clamp(image[c * plane + i], 0.0, 1.0);
      const long s = std::lround(v * maxval);
      if (maxval > 255) {
        buf.push_back(static_cast<unsigned char>((s >> 8) & 0xff));
        buf.push_back(static_cast<unsigned char>(s & 0xff));
      } else {
        buf.push_back(static_cast<unsigned char>(s));
      }
    }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

Tensor read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("pnm: cannot open " + path);
  const std::string magic = next_token(in, path);
  std::int64_t channels;
  if (magic == "P5")
    channels = 1;
  else if (magic == "P6")
    channels = 3;
  else
    throw IoError("pnm: unsupported magic '" + magic + "' in " + path);
  const std::int64_t w = parse_int(next_token(in, path), path);
  const std::int64_t h = parse_int(next_token(in, path), path);
  const std::int64_t maxval = parse_int(next_token(in, path), path);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
    throw IoError("pnm: bad dimensions/maxval in " + path);
  // header ends with exactly one whitespace byte, already consumed by next_token

  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w * h * channels * bytes));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw IoError("pnm: truncated pixel data in " + path);

  Tensor out({channels, h, w});
  const std::int64_t plane = h * w;
  const double inv = 1.0 / static_cast<double>(maxval);
  for (std::int64_t i = 0; i < plane; ++i)
    for (std::int64_t c = 0; c < channels; ++c) {
      const std::size_t off = static_cast<std::size_t>((i * channels + c) * bytes);
      const std::int64_t v =
          bytes == 2 ? (static_cast<std::int64_t>(raw[off]) << 8) | raw[off + 1] : raw[off];
      out[c * plane + i] = static_cast<double>(v) * inv;
    }
  return out;
}

void write_pgm(const std::string& path, const Tensor& image, int maxval) {
  Tensor img = image;
  if (img.rank() == 2) img = img.reshaped({1, image.dim(0), image.dim(1)});
  if (img.rank() != 3 || img.dim(0) != 1)
    throw ShapeError("write_pgm: image must be (1,H,W) or (H,W), got " +
                     shape_str(image.shape()));
  if (maxval != 255 && maxval != 65535) throw ConfigError("write_pgm: maxval must be 255 or 65535");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("pnm: cannot write " + path);
  out << "P5\n" << img.dim(2) << " " << img.dim(1) << "\n" << maxval << "\n";
  write_samples(out, img, 1, img.dim(1) * img.dim(2), maxval);
  if (!out) throw IoError("pnm: write failed for " + path);
}

void write_ppm(const std::string& path, const Tensor& image, int maxval) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw ShapeError("write_ppm: image must be (3,H,W), got " + shape_str(image.shape()));
  if (maxval != 255 && maxval != 65535) throw ConfigError("write_ppm: maxval must be 255 or 65535");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("pnm: cannot write " + path);
  out << "P6\n" << image.dim(2) << " " << image.dim(1) << "\n" << maxval << "\n";
  write_samples(out, image, 3, image.dim(1) * image.dim(2), maxval);
  if (!out) throw IoError("pnm: write failed for " + path);
}

}  // namespace vsr
