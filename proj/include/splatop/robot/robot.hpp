#pragma once

#include <string>

#include "splatop/core/gaussian.hpp"
#include "splatop/render/camera.hpp"
#include "splatop/render/image.hpp"
#include "splatop/robot/kinematics.hpp"

namespace splatop {

/// Planar base pose plus arm joints. Yaw is kept in (-pi, pi].
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  JointVector joints;
  double timestamp = 0.0;

  bool operator==(const RobotState& o) const {
    return x == o.x && y == o.y && yaw == o.yaw && joints == o.joints && timestamp == o.timestamp;
  }
};

/// Base velocity command in the body frame. The yaw rate is an extension of
/// the planar (vx, vy) command; it defaults to zero.
struct BaseCommand {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  bool operator==(const BaseCommand&) const = default;
  bool is_zero() const { return vx == 0.0 && vy == 0.0 && omega == 0.0; }
};

struct BaseLimits {
  double max_linear = 1.0;   // m/s per component
  double max_angular = 1.0;  // rad/s
};

BaseCommand clamp_command(const BaseCommand& cmd, const BaseLimits& limits);

/// Euler integration of body-frame velocities; dt must be in (0, 0.1].
RobotState base_step(const RobotState& state, const BaseCommand& cmd, double dt);

/// Robot base frame in the world (z = 0 plane, yaw about +z).
Rigid base_pose3d(const RobotState& state);

/// End-effector pose in the world frame.
Rigid ee_world_pose(const KinematicChain& chain, const RobotState& state);

/// Camera mounts: transforms from the parent link to the camera frame
/// (x right, y down, z forward) plus per-camera intrinsics.
struct CameraRig {
  Rigid base_mount = Rigid::Identity();
  Rigid ee_mount = Rigid::Identity();
  Intrinsics base_intrinsics;
  Intrinsics ee_intrinsics;
};

PinholeCamera base_camera(const RobotState& state, const CameraRig& rig);
PinholeCamera ee_camera(const KinematicChain& chain, const RobotState& state, const CameraRig& rig);

struct SimulatedFrames {
  PinholeCamera base_cam;
  PinholeCamera ee_cam;
  Image base_frame;
  Image ee_frame;
  DepthImage ee_depth;
};

SimulatedFrames simulate_cameras(const SplatScene& world, const KinematicChain& chain, const RobotState& state,
                                 const CameraRig& rig, const Vec3& background = Vec3::Zero());

/// Loads a chain description (JSON):
///   { "joints": [ { "name": "j1", "type": "revolute"|"prismatic", "axis": [x,y,z],
///                   "origin": { "xyz": [..], "rpy": [..] | "quat_wxyz": [..] },
///                   "limits": [lo, hi] }, ... ],
///     "ee_offset": { "xyz": [..], "rpy": [..] | "quat_wxyz": [..] } }
KinematicChain load_chain_file(const std::string& path);
KinematicChain parse_chain(const std::string& json_text);

/// Ready pose inside the limits of the bundled 7-joint chain.
JointVector default_ready_pose(const KinematicChain& chain);

}  // namespace splatop
