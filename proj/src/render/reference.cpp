#include "splatop/render/reference.hpp"

#include <algorithm>

namespace splatop {

Image render_reference(const SplatScene& scene, const PinholeCamera& cam, const Vec3& background) {
  const auto splats = prepare_splats(scene, cam);
  Image img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double T = 1.0;
      double r = 0.0, g = 0.0, b = 0.0;
      for (const PreparedSplat& s : splats) {
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
  return img;
}

DepthImage render_depth_reference(const SplatScene& scene, const PinholeCamera& cam) {
  const auto splats = prepare_splats(scene, cam);
  DepthImage depth(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      for (const PreparedSplat& s : splats) {
        if (splat_alpha(s, x, y) > 0.5) {
          depth.at(x, y) = static_cast<float>(s.depth);
          break;
        }
      }
    }
  }
  return depth;
}

}  // namespace splatop
