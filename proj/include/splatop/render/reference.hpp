#pragma once

#include "splatop/render/render.hpp"

namespace splatop {

// Serial brute-force compositors: every pixel visits every projected splat.
// Kept as the correctness oracle for the tiled path.

Image render_reference(const SplatScene& scene, const PinholeCamera& cam, const Vec3& background);

DepthImage render_depth_reference(const SplatScene& scene, const PinholeCamera& cam);

}  // namespace splatop
