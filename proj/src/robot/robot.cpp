#include "splatop/robot/robot.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "splatop/render/render.hpp"

namespace splatop {

BaseCommand clamp_command(const BaseCommand& cmd, const BaseLimits& limits) {
  return {std::clamp(cmd.vx, -limits.max_linear, limits.max_linear),
          std::clamp(cmd.vy, -limits.max_linear, limits.max_linear),
          std::clamp(cmd.omega, -limits.max_angular, limits.max_angular)};
}

RobotState base_step(const RobotState& state, const BaseCommand& cmd, double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("base_step: dt must lie in (0, 0.1]");
  RobotState next = state;
  const double c = std::cos(state.yaw), s = std::sin(state.yaw);
  next.x += (c * cmd.vx - s * cmd.vy) * dt;
  next.y += (s * cmd.vx + c * cmd.vy) * dt;
  next.yaw = wrap_angle(state.yaw + cmd.omega * dt);
  next.timestamp += dt;
  return next;
}

Rigid base_pose3d(const RobotState& state) {
  return make_rigid(Mat3(Eigen::AngleAxisd(state.yaw, Vec3::UnitZ())), Vec3(state.x, state.y, 0.0));
}

Rigid ee_world_pose(const KinematicChain& chain, const RobotState& state) {
  return base_pose3d(state) * forward_kinematics(chain, state.joints);
}

PinholeCamera base_camera(const RobotState& state, const CameraRig& rig) {
  const Rigid cam_to_world = base_pose3d(state) * rig.base_mount;
  return rig.base_intrinsics.with_pose(cam_to_world.inverse(Eigen::Isometry));
}

PinholeCamera ee_camera(const KinematicChain& chain, const RobotState& state, const CameraRig& rig) {
  const Rigid cam_to_world = ee_world_pose(chain, state) * rig.ee_mount;
  return rig.ee_intrinsics.with_pose(cam_to_world.inverse(Eigen::Isometry));
}

SimulatedFrames simulate_cameras(const SplatScene& world, const KinematicChain& chain, const RobotState& state,
                                 const CameraRig& rig, const Vec3& background) {
  SimulatedFrames f;
  f.base_cam = base_camera(state, rig);
  f.ee_cam = ee_camera(chain, state, rig);
  f.base_frame = render(world, f.base_cam, background);
  f.ee_frame = render(world, f.ee_cam, background);
  f.ee_depth = render_depth(world, f.ee_cam);
  return f;
}

namespace {

using nlohmann::json;

Vec3 vec3_of(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error(what + ": expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Rigid transform_of(const json& j, const std::string& what) {
  Rigid T = Rigid::Identity();
  if (j.contains("xyz")) T.translation() = vec3_of(j["xyz"], what + ".xyz");
  if (j.contains("rpy")) {
    const Vec3 rpy = vec3_of(j["rpy"], what + ".rpy");
    T.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                  Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                     .toRotationMatrix();
  } else if (j.contains("quat_wxyz")) {
    const auto& q = j["quat_wxyz"];
    if (!q.is_array() || q.size() != 4) throw std::runtime_error(what + ".quat_wxyz: expected 4 numbers");
    T.linear() = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>())
                     .normalized()
                     .toRotationMatrix();
  }
  return T;
}

}  // namespace

KinematicChain parse_chain(const std::string& json_text) {
  const json doc = json::parse(json_text);
  KinematicChain chain;
  if (!doc.contains("joints") || !doc["joints"].is_array()) throw std::runtime_error("chain: missing 'joints' array");
  int index = 0;
  for (const auto& jj : doc["joints"]) {
    const std::string where = "joints[" + std::to_string(index++) + "]";
    Joint j;
    j.name = jj.value("name", where);
    const std::string type = jj.value("type", "revolute");
    if (type == "revolute")
      j.type = JointType::Revolute;
    else if (type == "prismatic")
      j.type = JointType::Prismatic;
    else
      throw std::runtime_error(where + ".type: unknown joint type '" + type + "'");
    j.axis = vec3_of(jj.at("axis"), where + ".axis");
    if (jj.contains("origin")) j.origin = transform_of(jj["origin"], where + ".origin");
    const auto& lim = jj.at("limits");
    if (!lim.is_array() || lim.size() != 2) throw std::runtime_error(where + ".limits: expected [lo, hi]");
    j.lower = lim[0].get<double>();
    j.upper = lim[1].get<double>();
    chain.joints.push_back(j);
  }
  if (doc.contains("ee_offset")) chain.ee_offset = transform_of(doc["ee_offset"], "ee_offset");
  validate(chain);
  return chain;
}

KinematicChain load_chain_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open chain file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_chain(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

JointVector default_ready_pose(const KinematicChain& chain) {
  JointVector q(chain.dof());
  if (chain.dof() == 7) {
    q << 0.0, -0.785398, 0.0, -2.356194, 0.0, 1.570796, 0.785398;
  } else {
    q = 0.5 * (chain.lower_limits() + chain.upper_limits());
  }
  return chain.clamp(q);
}

}  // namespace splatop
