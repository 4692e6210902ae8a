#include "splatop/app/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "splatop/core/splat_io.hpp"

namespace splatop {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Ctx {
  std::string origin;
  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ConfigError(origin + ": " + field + ": " + what);
  }
};

double num(const Ctx& c, const json& j, const std::string& key, const std::string& field, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) c.fail(field + "." + key, "expected a number");
  return j[key].get<double>();
}

Vec3 vec3(const Ctx& c, const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) c.fail(field, "expected [x, y, z]");
  for (const auto& v : j)
    if (!v.is_number()) c.fail(field, "expected numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Rigid mount_of(const Ctx& c, const json& j, const std::string& field) {
  Rigid T = Rigid::Identity();
  if (j.contains("xyz")) T.translation() = vec3(c, j["xyz"], field + ".xyz");
  const int forms = j.contains("rpy") + j.contains("quat_wxyz") + j.contains("look_at");
  if (forms > 1) c.fail(field, "give only one of rpy, quat_wxyz, look_at");
  if (j.contains("rpy")) {
    const Vec3 rpy = vec3(c, j["rpy"], field + ".rpy");
    T.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                  Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                     .toRotationMatrix();
  } else if (j.contains("quat_wxyz")) {
    const auto& q = j["quat_wxyz"];
    if (!q.is_array() || q.size() != 4) c.fail(field + ".quat_wxyz", "expected 4 numbers");
    T.linear() = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>())
                     .normalized()
                     .toRotationMatrix();
  } else if (j.contains("look_at")) {
    const Vec3 target = vec3(c, j["look_at"], field + ".look_at");
    try {
      T.linear() = look_at_rotation(T.translation(), target);
    } catch (const std::exception& e) {
      c.fail(field + ".look_at", e.what());
    }
  }
  return T;
}

Intrinsics intrinsics_of(const Ctx& c, const json& j, const std::string& field, const Intrinsics& d) {
  Intrinsics k = d;
  k.fx = num(c, j, "fx", field, d.fx);
  k.fy = num(c, j, "fy", field, d.fy);
  k.width = static_cast<int>(num(c, j, "width", field, d.width));
  k.height = static_cast<int>(num(c, j, "height", field, d.height));
  k.cx = num(c, j, "cx", field, (k.width - 1) / 2.0);
  k.cy = num(c, j, "cy", field, (k.height - 1) / 2.0);
  if (!(k.fx > 0 && k.fy > 0) || k.width <= 0 || k.height <= 0) c.fail(field, "invalid intrinsics");
  return k;
}

std::string resolve(const Ctx& c, const json& doc, const std::string& key, const std::string& base_dir) {
  if (!doc.contains(key) || !doc[key].is_string()) c.fail(key, "missing path");
  fs::path p = doc[key].get<std::string>();
  if (p.is_relative()) p = fs::path(base_dir) / p;
  return p.lexically_normal().string();
}

}  // namespace

AppConfig parse_config(const std::string& json_text, const std::string& base_dir, const std::string& origin) {
  const Ctx c{origin};
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!doc.is_object()) c.fail("(root)", "expected an object");

  AppConfig cfg;
  cfg.path = origin;
  if (doc.contains("listen")) {
    const auto& l = doc["listen"];
    cfg.host = l.value("host", cfg.host);
    cfg.port = static_cast<std::uint16_t>(num(c, l, "port", "listen", cfg.port));
    if (l.contains("ws_port")) cfg.ws_port = static_cast<std::uint16_t>(num(c, l, "ws_port", "listen", 0));
  }
  if (!doc.contains("seed") || !doc["seed"].is_number_integer()) c.fail("seed", "an integer seed is required");
  SessionConfig& s = cfg.session;
  s.seed = doc["seed"].get<std::uint64_t>();
  s.tick_rate = num(c, doc, "tick_rate", "(root)", 50.0);
  s.frame_stride = static_cast<int>(num(c, doc, "frame_stride", "(root)", 5));
  if (!(s.tick_rate > 0.0) || s.tick_rate < 10.0) c.fail("tick_rate", "must be >= 10 Hz (base steps are <= 0.1 s)");
  if (s.frame_stride < 1) c.fail("frame_stride", "must be >= 1");
  s.arm_rate = num(c, doc, "arm_rate", "(root)", 1.0);
  if (doc.contains("background")) s.background = vec3(c, doc["background"], "background");
  if (doc.contains("base_limits")) {
    s.base_limits.max_linear = num(c, doc["base_limits"], "max_linear", "base_limits", 1.0);
    s.base_limits.max_angular = num(c, doc["base_limits"], "max_angular", "base_limits", 1.0);
  }

  cfg.chain_path = resolve(c, doc, "chain", base_dir);
  cfg.world_path = resolve(c, doc, "world", base_dir);

  if (doc.contains("robot")) {
    const auto& r = doc["robot"];
    cfg.initial.x = num(c, r, "x", "robot", 0.0);
    cfg.initial.y = num(c, r, "y", "robot", 0.0);
    cfg.initial.yaw = wrap_angle(num(c, r, "yaw", "robot", 0.0));
    if (r.contains("joints")) {
      const auto& q = r["joints"];
      if (!q.is_array()) c.fail("robot.joints", "expected an array");
      cfg.initial.joints.resize(static_cast<Eigen::Index>(q.size()));
      for (std::size_t i = 0; i < q.size(); ++i) cfg.initial.joints[static_cast<Eigen::Index>(i)] = q[i].get<double>();
    }
  }

  if (doc.contains("cameras")) {
    const auto& cams = doc["cameras"];
    if (cams.contains("base")) {
      s.rig.base_intrinsics = intrinsics_of(c, cams["base"], "cameras.base", s.rig.base_intrinsics);
      if (cams["base"].contains("mount")) s.rig.base_mount = mount_of(c, cams["base"]["mount"], "cameras.base.mount");
    }
    if (cams.contains("ee")) {
      s.rig.ee_intrinsics = intrinsics_of(c, cams["ee"], "cameras.ee", s.rig.ee_intrinsics);
      if (cams["ee"].contains("mount")) s.rig.ee_mount = mount_of(c, cams["ee"]["mount"], "cameras.ee.mount");
    }
  }

  ReconstructionConfig& rc = s.reconstruction;
  if (doc.contains("capture")) {
    const auto& cap = doc["capture"];
    const Vec3 center = cap.contains("center") ? vec3(c, cap["center"], "capture.center") : Vec3(0.6, 0, 0.45);
    std::vector<Ring> rings;
    if (cap.contains("rings")) {
      int i = 0;
      for (const auto& r : cap["rings"]) {
        const std::string f = "capture.rings[" + std::to_string(i++) + "]";
        Ring ring;
        ring.radius = num(c, r, "radius", f, ring.radius);
        ring.height = num(c, r, "height", f, ring.height);
        ring.count = static_cast<int>(num(c, r, "count", f, ring.count));
        rings.push_back(ring);
      }
    } else {
      rings = {Ring{0.20, 0.25, 12}, Ring{0.15, 0.32, 12}};
    }
    try {
      rc.plan = plan_capture(center, rings);
    } catch (const std::exception& e) {
      c.fail("capture", e.what());
    }
  } else {
    rc.plan = plan_capture(Vec3(0.6, 0, 0.45), {Ring{0.20, 0.25, 12}, Ring{0.15, 0.32, 12}});
  }
  if (doc.contains("seeding")) {
    const auto& j = doc["seeding"];
    rc.seeding.stride = static_cast<int>(num(c, j, "stride", "seeding", rc.seeding.stride));
    rc.seeding.neighbors = static_cast<int>(num(c, j, "neighbors", "seeding", rc.seeding.neighbors));
    rc.seeding.min_scale = num(c, j, "min_scale", "seeding", rc.seeding.min_scale);
    rc.seeding.max_scale = num(c, j, "max_scale", "seeding", rc.seeding.max_scale);
    rc.seeding.opacity = num(c, j, "opacity", "seeding", rc.seeding.opacity);
  }
  if (doc.contains("train")) {
    const auto& j = doc["train"];
    TrainConfig& t = rc.train;
    t.iterations = static_cast<int>(num(c, j, "iterations", "train", t.iterations));
    t.lr_final_factor = num(c, j, "lr_final_factor", "train", t.lr_final_factor);
    t.views_per_step = static_cast<int>(num(c, j, "views_per_step", "train", t.views_per_step));
    if (j.contains("lr")) {
      const auto& l = j["lr"];
      t.lr.mean = num(c, l, "mean", "train.lr", t.lr.mean);
      t.lr.log_scale = num(c, l, "log_scale", "train.lr", t.lr.log_scale);
      t.lr.rotation = num(c, l, "rotation", "train.lr", t.lr.rotation);
      t.lr.opacity_logit = num(c, l, "opacity_logit", "train.lr", t.lr.opacity_logit);
      t.lr.color = num(c, l, "color", "train.lr", t.lr.color);
    }
  }
  rc.train.rng_seed = s.seed;
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const fs::path dir = fs::absolute(path).parent_path();
  return parse_config(ss.str(), dir.string(), path);
}

void apply_listen_flag(AppConfig& cfg, const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--listen: expected host:port, got '" + listen + "'");
  const std::string host = listen.substr(0, colon);
  const std::string port = listen.substr(colon + 1);
  try {
    std::size_t used = 0;
    const long p = std::stol(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
    cfg.port = static_cast<std::uint16_t>(p);
  } catch (const std::exception&) {
    throw ConfigError("--listen: invalid port '" + port + "'");
  }
  if (!host.empty()) cfg.host = host;
}

PinholeCamera parse_camera_spec(const std::string& json_text, const std::string& origin) {
  const Ctx c{origin};
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!doc.is_object()) c.fail("(root)", "expected an object");
  const Intrinsics k = intrinsics_of(c, doc, "camera", Intrinsics{});
  Rigid pose = Rigid::Identity();
  if (doc.contains("eye") || doc.contains("target")) {
    if (!doc.contains("eye") || !doc.contains("target")) c.fail("camera", "eye and target go together");
    const Vec3 up = doc.contains("up") ? vec3(c, doc["up"], "up") : Vec3::UnitZ();
    try {
      pose = look_at_pose(vec3(c, doc["eye"], "eye"), vec3(c, doc["target"], "target"), up);
    } catch (const std::exception& e) {
      c.fail("eye", e.what());
    }
  } else if (doc.contains("world_to_camera")) {
    pose = mount_of(c, doc["world_to_camera"], "world_to_camera");
  }
  return k.with_pose(pose);
}

PinholeCamera load_camera_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open camera file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_camera_spec(ss.str(), path);
}

LoadedWorld load_world(const AppConfig& cfg) {
  LoadedWorld w{SplatScene{}, KinematicChain{}};
  try {
    w.chain = load_chain_file(cfg.chain_path);
  } catch (const std::exception& e) {
    throw ConfigError("chain " + cfg.chain_path + ": " + e.what());
  }
  try {
    w.world = load_scene_file(cfg.world_path);
  } catch (const std::exception& e) {
    throw ConfigError("world " + cfg.world_path + ": " + e.what());
  }
  return w;
}

}  // namespace splatop
