#include "splatop/render/render.hpp"

#include <algorithm>
#include <omp.h>

namespace splatop {
namespace {

int worker_count(const RenderOptions& opts) { return opts.workers > 0 ? opts.workers : omp_get_max_threads(); }

// Radius (in standard deviations) beyond which alpha < 1/255 for this opacity;
// never tighter than 3 sigma.
double support_sigmas(double opacity) {
  const double peak = opacity * 255.0;
  const double exact = peak > 1.0 ? std::sqrt(2.0 * std::log(peak)) : 0.0;
  return std::max(3.0, exact);
}

}  // namespace

std::vector<PreparedSplat> prepare_splats(const SplatScene& scene, const PinholeCamera& cam, RenderStats* stats) {
  RenderStats local;
  std::vector<PreparedSplat> out;
  out.reserve(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto projected = project_gaussian(scene[i], cam);
    if (!projected) {
      ++local.culled;
      continue;
    }
    const Mat2& cov = projected->cov2d;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
    if (!(det >= kSingularDeterminant)) {
      ++local.singular;
      continue;
    }
    ++local.projected;

    PreparedSplat s;
    s.mean = projected->mean2d;
    s.conic_a = cov(1, 1) / det;
    s.conic_b = -cov(0, 1) / det;
    s.conic_c = cov(0, 0) / det;
    s.depth = projected->depth;
    s.color = projected->color;
    s.opacity = projected->opacity;
    s.index = static_cast<std::uint32_t>(i);

    if (s.opacity >= kAlphaMin) {
      const double r = support_sigmas(s.opacity);
      const double ex = r * std::sqrt(cov(0, 0));
      const double ey = r * std::sqrt(cov(1, 1));
      // One pixel of slack absorbs rounding between the box and the alpha test.
      const double fx0 = std::floor(s.mean.x() - ex) - 1.0;
      const double fy0 = std::floor(s.mean.y() - ey) - 1.0;
      const double fx1 = std::ceil(s.mean.x() + ex) + 2.0;
      const double fy1 = std::ceil(s.mean.y() + ey) + 2.0;
      s.x0 = static_cast<int>(std::clamp(fx0, 0.0, static_cast<double>(cam.width)));
      s.y0 = static_cast<int>(std::clamp(fy0, 0.0, static_cast<double>(cam.height)));
      s.x1 = static_cast<int>(std::clamp(fx1, 0.0, static_cast<double>(cam.width)));
      s.y1 = static_cast<int>(std::clamp(fy1, 0.0, static_cast<double>(cam.height)));
    }
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const PreparedSplat& a, const PreparedSplat& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.index < b.index);
  });
  if (stats) *stats = local;
  return out;
}

TileBins bin_splats(const std::vector<PreparedSplat>& splats, int width, int height) {
  TileBins bins;
  bins.tiles_x = (width + kTileSize - 1) / kTileSize;
  bins.tiles_y = (height + kTileSize - 1) / kTileSize;
  bins.lists.resize(static_cast<std::size_t>(bins.tiles_x) * bins.tiles_y);
  for (std::size_t k = 0; k < splats.size(); ++k) {
    const auto& s = splats[k];
    if (s.covers_nothing()) continue;
    const int tx0 = s.x0 / kTileSize, tx1 = (s.x1 - 1) / kTileSize;
    const int ty0 = s.y0 / kTileSize, ty1 = (s.y1 - 1) / kTileSize;
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        bins.lists[static_cast<std::size_t>(ty) * bins.tiles_x + tx].push_back(static_cast<std::uint32_t>(k));
  }
  return bins;
}

Image render(const SplatScene& scene, const PinholeCamera& cam, const Vec3& background, const RenderOptions& opts,
             RenderStats* stats) {
  const auto splats = prepare_splats(scene, cam, stats);
  const auto bins = bin_splats(splats, cam.width, cam.height);
  Image img(cam.width, cam.height);
  const int tile_count = bins.tiles_x * bins.tiles_y;

#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count(opts))
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& list = bins.lists[tile];
    const int tx = tile % bins.tiles_x, ty = tile / bins.tiles_x;
    const int px0 = tx * kTileSize, py0 = ty * kTileSize;
    const int px1 = std::min(px0 + kTileSize, cam.width), py1 = std::min(py0 + kTileSize, cam.height);
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        double T = 1.0;
        double r = 0.0, g = 0.0, b = 0.0;
        for (const std::uint32_t k : list) {
          const PreparedSplat& s = splats[k];
          const double alpha = splat_alpha(s, x, y);
          if (alpha < kAlphaMin) continue;
          const double w = alpha * T;
          r += s.color.x() * w;
          g += s.color.y() * w;
          b += s.color.z() * w;
          T *= 1.0 - alpha;
          if (T < kTransmittanceMin) break;
        }
        float* out = img.pixel(x, y);
        out[0] = static_cast<float>(std::clamp(r + background.x() * T, 0.0, 1.0));
        out[1] = static_cast<float>(std::clamp(g + background.y() * T, 0.0, 1.0));
        out[2] = static_cast<float>(std::clamp(b + background.z() * T, 0.0, 1.0));
      }
    }
  }
  return img;
}

DepthImage render_depth(const SplatScene& scene, const PinholeCamera& cam, const RenderOptions& opts) {
  const auto splats = prepare_splats(scene, cam);
  const auto bins = bin_splats(splats, cam.width, cam.height);
  DepthImage depth(cam.width, cam.height);
  const int tile_count = bins.tiles_x * bins.tiles_y;

#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count(opts))
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& list = bins.lists[tile];
    const int tx = tile % bins.tiles_x, ty = tile / bins.tiles_x;
    const int px0 = tx * kTileSize, py0 = ty * kTileSize;
    const int px1 = std::min(px0 + kTileSize, cam.width), py1 = std::min(py0 + kTileSize, cam.height);
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        for (const std::uint32_t k : list) {
          if (splat_alpha(splats[k], x, y) > 0.5) {
            depth.at(x, y) = static_cast<float>(splats[k].depth);
            break;
          }
        }
      }
    }
  }
  return depth;
}

}  // namespace splatop
