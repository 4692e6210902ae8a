#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "splatop/core/gaussian.hpp"
#include "splatop/render/camera.hpp"
#include "splatop/render/image.hpp"
#include "splatop/render/projection.hpp"

namespace splatop {

inline constexpr int kTileSize = 16;

struct RenderOptions {
  /// OpenMP worker count for the tile loop; 0 uses the runtime default.
  int workers = 0;
};

struct RenderStats {
  std::size_t projected = 0;
  std::size_t culled = 0;
  std::size_t singular = 0;
};

/// A projected splat ready for compositing: inverse 2D covariance (conic),
/// conservative pixel bounds of its alpha >= 1/255 footprint, and the index of
/// the source Gaussian.
struct PreparedSplat {
  Vec2 mean = Vec2::Zero();
  double conic_a = 0.0;  // Q(0,0)
  double conic_b = 0.0;  // Q(0,1)
  double conic_c = 0.0;  // Q(1,1)
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open pixel box, clipped to the image
  std::uint32_t index = 0;

  bool covers_nothing() const { return x0 >= x1 || y0 >= y1; }
};

/// Unclamped opacity-weighted Gaussian falloff exponent at pixel (px, py).
inline double splat_power(const PreparedSplat& s, double px, double py) {
  const double dx = px - s.mean.x();
  const double dy = py - s.mean.y();
  return -0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) - s.conic_b * dx * dy;
}

/// min(opacity * exp(power), 0.99). Callers skip values below 1/255.
inline double splat_alpha(const PreparedSplat& s, double px, double py) {
  const double a = s.opacity * std::exp(splat_power(s, px, py));
  return a < kAlphaMax ? a : kAlphaMax;
}

/// Projects every Gaussian, drops culled and singular ones, and sorts by
/// depth ascending with ties broken by scene index.
std::vector<PreparedSplat> prepare_splats(const SplatScene& scene, const PinholeCamera& cam,
                                          RenderStats* stats = nullptr);

/// Per-tile splat lists (row-major tiles of kTileSize), each in depth order.
struct TileBins {
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<std::uint32_t>> lists;  // indices into the prepared vector
};

TileBins bin_splats(const std::vector<PreparedSplat>& splats, int width, int height);

/// Tile-parallel front-to-back compositor.
Image render(const SplatScene& scene, const PinholeCamera& cam, const Vec3& background,
             const RenderOptions& opts = {}, RenderStats* stats = nullptr);

/// Per pixel, camera depth of the first splat (front to back) whose alpha
/// exceeds 0.5; kDepthInfinity where none does.
DepthImage render_depth(const SplatScene& scene, const PinholeCamera& cam, const RenderOptions& opts = {});

}  // namespace splatop
