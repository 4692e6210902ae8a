#pragma once

#include <string>
#include <vector>

#include "splatop/core/geometry.hpp"

namespace splatop {

struct Ring {
  double radius = 0.2;
  double height = 0.25;  // above the look-at point
  int count = 12;
  bool operator==(const Ring&) const = default;
};

/// Camera poses (camera-to-world, camera looks along +z) on concentric rings,
/// every optical axis passing through `look_at`.
struct CapturePlan {
  std::vector<Rigid> poses;
  Vec3 look_at = Vec3::Zero();
  std::vector<Ring> rings;
};

/// Poses uniformly spaced on each ring, starting at angle 0 (+x from the
/// center), oriented toward `center` with +z as the up vector.
CapturePlan plan_capture(const Vec3& center, const std::vector<Ring>& rings);

/// Line-oriented text: a header block, then one pose per line as
/// "px py pz qw qx qy qz" (camera-to-world, %.17g).
std::string serialize_plan(const CapturePlan& plan);
CapturePlan parse_plan(const std::string& text);

void write_plan(const std::string& path, const CapturePlan& plan);
CapturePlan read_plan(const std::string& path);

}  // namespace splatop
