#include "splatop/render/image.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "splatop/core/splat_io.hpp"

namespace splatop {

Rgb8Image to_rgb8(const Image& img) {
  Rgb8Image out{img.width, img.height, std::vector<std::uint8_t>(img.rgb.size())};
  for (std::size_t i = 0; i < img.rgb.size(); ++i)
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(img.rgb[i] * 255.0), 0, 255));
  return out;
}

Image from_rgb8(const Rgb8Image& img) {
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.rgb[i] = img.pixels[i] / 255.0f;
  return out;
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto rgb8 = to_rgb8(img);
  out.insert(out.end(), rgb8.pixels.begin(), rgb8.pixels.end());
  return out;
}

Image decode_ppm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    std::string tok;
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        ++pos;
      } else {
        tok.push_back(c);
        ++pos;
      }
    }
    return tok;
  };
  if (next_token() != "P6") throw std::runtime_error("not a binary PPM (P6)");
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  if (next_token() != "255") throw std::runtime_error("PPM maxval must be 255");
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h * 3;
  if (w < 1 || h < 1 || bytes.size() < pos + n) throw std::runtime_error("PPM pixel data truncated");
  Rgb8Image rgb8{w, h, std::vector<std::uint8_t>(bytes.begin() + pos, bytes.begin() + pos + n)};
  return from_rgb8(rgb8);
}

void write_ppm(const std::string& path, const Image& img) { write_file_bytes(path, encode_ppm(img)); }

Image read_ppm(const std::string& path) { return decode_ppm(read_file_bytes(path)); }

void write_raw_rgb(const std::string& path, const Image& img) { write_file_bytes(path, to_rgb8(img).pixels); }

void write_depth(const std::string& path, const DepthImage& depth) {
  std::vector<std::uint8_t> bytes(depth.depth.size() * 4);
  std::memcpy(bytes.data(), depth.depth.data(), bytes.size());
  write_file_bytes(path, bytes);
}

DepthImage read_depth(const std::string& path, int width, int height) {
  const auto bytes = read_file_bytes(path);
  DepthImage d(width, height);
  if (bytes.size() != d.depth.size() * 4) throw std::runtime_error("depth file size mismatch: " + path);
  std::memcpy(d.depth.data(), bytes.data(), bytes.size());
  return d;
}

double mse(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("mse: image size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.rgb.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  return m == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / m);
}

}  // namespace splatop
