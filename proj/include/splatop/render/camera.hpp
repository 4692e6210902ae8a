#pragma once

#include "splatop/core/geometry.hpp"

namespace splatop {

/// Pinhole camera. Camera frame is x right, y down, z forward; `pose` maps
/// world coordinates into that frame. Pixel (i, j) samples the image plane at
/// continuous coordinate (i, j).
struct PinholeCamera {
  double fx = 100.0;
  double fy = 100.0;
  double cx = 64.0;
  double cy = 64.0;
  int width = 128;
  int height = 128;
  Rigid pose = Rigid::Identity();

  Rigid camera_to_world() const { return pose.inverse(Eigen::Isometry); }
  Vec3 center() const { return camera_to_world().translation(); }
};

struct Intrinsics {
  double fx = 100.0;
  double fy = 100.0;
  double cx = 64.0;
  double cy = 64.0;
  int width = 128;
  int height = 128;

  PinholeCamera with_pose(const Rigid& world_to_camera) const {
    return {fx, fy, cx, cy, width, height, world_to_camera};
  }
};

/// Throws std::invalid_argument on non-positive focal length, empty image or
/// a non-orthonormal pose rotation.
void validate(const PinholeCamera& cam);

/// Camera-to-world rotation whose optical axis points from `eye` to `target`
/// with image "up" as close to `up` as possible. Requires eye != target and a
/// viewing direction not parallel to `up`.
Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// World-to-camera pose for a camera at `eye` looking at `target`.
Rigid look_at_pose(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

}  // namespace splatop
