#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "splatop/core/geometry.hpp"

namespace splatop {

/// Row-major RGB, one f32 per channel in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0.0f) {}

  float* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const float* pixel(int x, int y) const { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  bool operator==(const Image&) const = default;
};

inline constexpr float kDepthInfinity = std::numeric_limits<float>::infinity();

struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> depth;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), depth(static_cast<std::size_t>(w) * h, kDepthInfinity) {}

  float at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return depth[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const DepthImage&) const = default;
};

/// 8-bit RGB image, the wire representation of video frames.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  bool operator==(const Rgb8Image&) const = default;
};

/// Each channel quantized as round(v * 255), clamped.
Rgb8Image to_rgb8(const Image& img);
Image from_rgb8(const Rgb8Image& img);

std::vector<std::uint8_t> encode_ppm(const Image& img);
/// Parses a binary P6 file with maxval 255.
Image decode_ppm(const std::vector<std::uint8_t>& bytes);
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);
/// Headerless RGB8 dump.
void write_raw_rgb(const std::string& path, const Image& img);

/// Raw little-endian f32 depth dump, headerless.
void write_depth(const std::string& path, const DepthImage& depth);
DepthImage read_depth(const std::string& path, int width, int height);

/// 10 * log10(1 / MSE) over all channels.
double psnr(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);

}  // namespace splatop
