#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "splatop/session/session.hpp"

namespace splatop {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Application configuration (JSON). Relative paths resolve against the
/// directory of the config file. Schema:
///
///   listen:       { host, port, ws_port? }
///   seed:         integer (required)
///   tick_rate:    Hz (default 50)
///   frame_stride: ticks between camera frames (default 5)
///   chain:        path to the kinematic chain JSON
///   world:        path to the world scene (.splat or .ply)
///   background:   [r, g, b]
///   robot:        { x, y, yaw, joints? }
///   base_limits:  { max_linear, max_angular }
///   arm_rate:     rad/s
///   cameras:      { base: CAM, ee: CAM } with
///                 CAM = { fx, fy, cx, cy, width, height,
///                         mount: { xyz, rpy | quat_wxyz | look_at } }
///   capture:      { center: [x,y,z], rings: [ { radius, height, count } ] }   (robot base frame)
///   seeding:      { stride, neighbors, min_scale, max_scale, opacity }
///   train:        { iterations, lr_final_factor, views_per_step,
///                   lr: { mean, log_scale, rotation, opacity_logit, color } }
struct AppConfig {
  std::string path;  // the config file itself
  std::string host = "127.0.0.1";
  std::uint16_t port = 7400;
  std::optional<std::uint16_t> ws_port;
  std::string chain_path;
  std::string world_path;
  RobotState initial;
  SessionConfig session;
};

AppConfig load_config(const std::string& path);
AppConfig parse_config(const std::string& json_text, const std::string& base_dir, const std::string& origin);

/// Parses "host:port" or ":port".
void apply_listen_flag(AppConfig& cfg, const std::string& listen);

struct LoadedWorld {
  SplatScene world;
  KinematicChain chain;
};

/// Camera spec (JSON): { fx, fy, cx?, cy?, width, height } plus an optional
/// pose given either as { eye, target, up? } or as
/// { world_to_camera: { xyz, quat_wxyz } }. Without a pose the camera sits at
/// the origin looking down +z.
PinholeCamera parse_camera_spec(const std::string& json_text, const std::string& origin);
PinholeCamera load_camera_spec(const std::string& path);

/// Loads the chain and world files, naming the path on failure.
LoadedWorld load_world(const AppConfig& cfg);

}  // namespace splatop
