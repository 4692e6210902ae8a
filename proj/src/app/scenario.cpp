#include "splatop/app/scenario.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "splatop/app/runtime.hpp"
#include "splatop/protocol/payloads.hpp"
#include "splatop/protocol/topics.hpp"

namespace splatop {

namespace {

using nlohmann::json;

constexpr std::uint32_t kTicksPerBatch = 32;  // keeps every outbound queue under its 64-message cap

const char* ik_name(IkStatus s) {
  switch (s) {
    case IkStatus::Idle: return "Idle";
    case IkStatus::Ok: return "Ok";
    case IkStatus::Unconverged: return "Unconverged";
  }
  return "?";
}

struct AssertionFailed {
  std::string what;
};

class Runner {
 public:
  Runner(SessionServer& server, double tick_rate, std::chrono::seconds timeout)
      : tick_rate_(tick_rate), timeout_(timeout) {
    client_ = Client::connect("127.0.0.1", server.port());
    client_->subscribe(std::string(topics::kPhase));
    client_->subscribe(std::string(topics::kJointStates));
    client_->subscribe(std::string(topics::kScene));
    client_->send(Frame{FrameKind::Ping, "sync", {}});
    for (;;) {
      auto f = client_->next(std::chrono::seconds(10));
      if (!f) throw ProtocolError(ProtocolError::Code::Transport, "scenario: server did not answer");
      if (f->kind == FrameKind::Pong) break;
      observe(*f, false);
    }
  }

  std::string transcript;

  void line(const std::string& s) { transcript += s + "\n"; }

  void advance(std::uint64_t ticks) {
    while (ticks > 0) {
      const auto k = static_cast<std::uint32_t>(std::min<std::uint64_t>(ticks, kTicksPerBatch));
      client_->publish(std::string(topics::kClock), encode_clock(k));
      const std::uint32_t target = phase_.tick + k;
      const auto deadline = std::chrono::steady_clock::now() + timeout_;
      while (phase_.tick < target) {
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        auto f = left.count() > 0 ? client_->next(left) : std::nullopt;
        if (!f) throw AssertionFailed{"server did not complete " + std::to_string(k) + " ticks in time"};
        observe(*f, true);
      }
      ticks -= k;
    }
  }

  void publish(std::string_view topic, const Bytes& payload) {
    last_rejected_baseline_ = phase_.rejected;
    client_->publish(std::string(topic), payload);
    advance(1);
  }

  double tick_rate_;
  std::chrono::seconds timeout_;
  std::unique_ptr<Client> client_;
  PhaseMsg phase_;
  std::optional<JointStatesMsg> joints_;
  std::uint32_t last_rejected_baseline_ = 0;
  std::size_t scenes_received_ = 0;
  SceneAssembler assembler_;
  std::uint32_t drag_seq_ = 0;

 private:
  void observe(const Frame& f, bool record) {
    if (f.kind != FrameKind::Publish) return;
    if (f.topic == topics::kJointStates) {
      joints_ = decode_joint_states(f.payload);
    } else if (f.topic == topics::kScene) {
      if (auto bytes = assembler_.add(decode_scene_chunk(f.payload))) {
        ++scenes_received_;
        if (record) line("scene " + std::to_string(bytes->size()) + " bytes");
      }
    } else if (f.topic == topics::kPhase) {
      phase_ = decode_phase(f.payload);
      if (record) log_tick();
    }
  }

  void log_tick() {
    char buf[512];
    if (joints_) {
      const auto& r = joints_->robot;
      std::snprintf(buf, sizeof buf,
                    "tick %u phase %s base %.6f %.6f %.6f ee %.6f %.6f %.6f ik %s %.6f rejected %u stale %d",
                    phase_.tick, phase_name(phase_.phase), r.x, r.y, r.yaw, joints_->ee_position.x(),
                    joints_->ee_position.y(), joints_->ee_position.z(), ik_name(joints_->ik_status),
                    joints_->ik_residual, phase_.rejected, phase_.splat_stale ? 1 : 0);
    } else {
      std::snprintf(buf, sizeof buf, "tick %u phase %s rejected %u", phase_.tick, phase_name(phase_.phase),
                    phase_.rejected);
    }
    std::string s = buf;
    if (!phase_.diagnostic.empty()) s += " | " + phase_.diagnostic;
    line(s);
  }
};

Vec3 vec3_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ScriptError(where + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

double number(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ScriptError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

void check_expect(Runner& r, const json& e, const std::string& where) {
  if (!e.is_object()) throw ScriptError(where + ": expect must be an object");
  const double tol = number(e, "tol", 0.01, where);
  char buf[256];
  for (const auto& [key, val] : e.items()) {
    if (key == "tol" || key == "frame") continue;
    if (key == "phase") {
      const auto p = parse_phase(val.get<std::string>());
      if (!p) throw ScriptError(where + ": unknown phase '" + val.get<std::string>() + "'");
      if (r.phase_.phase != *p)
        throw AssertionFailed{std::string("phase is ") + phase_name(r.phase_.phase) + ", expected " + phase_name(*p)};
    } else if (key == "base_near") {
      if (!val.is_array() || val.size() != 2) throw ScriptError(where + ".base_near: expected [x, y]");
      if (!r.joints_) throw AssertionFailed{"no joint state received yet"};
      const double dx = r.joints_->robot.x - val[0].get<double>(), dy = r.joints_->robot.y - val[1].get<double>();
      const double d = std::hypot(dx, dy);
      if (!(d <= tol)) {
        std::snprintf(buf, sizeof buf, "base is %.4f m from the waypoint (tol %.4f)", d, tol);
        throw AssertionFailed{buf};
      }
    } else if (key == "ee_near") {
      const Vec3 target = vec3_of(val, where + ".ee_near");
      if (!r.joints_) throw AssertionFailed{"no joint state received yet"};
      Vec3 ee = r.joints_->ee_position;
      const std::string frame = e.value("frame", "world");
      if (frame == "base") {
        ee = base_pose3d(r.joints_->robot).inverse(Eigen::Isometry) * ee;
      } else if (frame != "world") {
        throw ScriptError(where + ".frame: expected world or base");
      }
      const double d = (ee - target).norm();
      if (!(d < tol)) {
        std::snprintf(buf, sizeof buf, "|EE - target| = %.5f m (tol %.4f)", d, tol);
        throw AssertionFailed{buf};
      }
    } else if (key == "last_rejected") {
      const bool rejected = r.phase_.rejected > r.last_rejected_baseline_;
      if (rejected != val.get<bool>())
        throw AssertionFailed{rejected ? "last command was rejected" : "last command was not rejected"};
    } else if (key == "rejected_total") {
      if (r.phase_.rejected != val.get<std::uint32_t>())
        throw AssertionFailed{"rejected total is " + std::to_string(r.phase_.rejected)};
    } else if (key == "ik_status") {
      if (!r.joints_ || ik_name(r.joints_->ik_status) != val.get<std::string>())
        throw AssertionFailed{std::string("ik status is ") + (r.joints_ ? ik_name(r.joints_->ik_status) : "none")};
    } else if (key == "scene_received") {
      if ((r.scenes_received_ > 0) != val.get<bool>())
        throw AssertionFailed{"scenes received: " + std::to_string(r.scenes_received_)};
    } else {
      throw ScriptError(where + ": unknown expectation '" + key + "'");
    }
  }
}

void run_step(Runner& r, const json& step, const std::string& where) {
  if (!step.is_object()) throw ScriptError(where + ": expected an object");
  if (step.contains("cmd")) {
    const std::string cmd = step["cmd"].get<std::string>();
    r.line("# " + where + ": cmd " + cmd);
    if (cmd == "drive") {
      r.publish(topics::kCmdVel, encode_cmd_vel({number(step, "vx", 0, where), number(step, "vy", 0, where),
                                                 number(step, "omega", 0, where)}));
    } else if (cmd == "begin_reconstruction") {
      r.publish(topics::kCommand, encode_session_command(SessionCommandCode::BeginReconstruction));
    } else if (cmd == "abort_reconstruction") {
      r.publish(topics::kCommand, encode_session_command(SessionCommandCode::AbortReconstruction));
    } else if (cmd == "release_drag") {
      r.publish(topics::kCommand, encode_session_command(SessionCommandCode::ReleaseDrag));
    } else if (cmd == "switch_to_locomotion") {
      r.publish(topics::kCommand, encode_session_command(SessionCommandCode::SwitchToLocomotion));
    } else if (cmd == "drag") {
      TargetPoseMsg m;
      m.seq = ++r.drag_seq_;
      if (!step.contains("target")) throw ScriptError(where + ": drag needs a target");
      m.target.position = vec3_of(step["target"], where + ".target");
      if (step.contains("orientation")) {
        const auto& q = step["orientation"];
        if (!q.is_array() || q.size() != 4) throw ScriptError(where + ".orientation: expected [w, x, y, z]");
        m.target.orientation =
            Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()).normalized();
      }
      r.publish(topics::kTargetPose, encode_target_pose(m));
    } else {
      throw ScriptError(where + ": unknown command '" + cmd + "'");
    }
  } else if (step.contains("wait")) {
    const double secs = number(step, "wait", 0, where);
    if (secs < 0) throw ScriptError(where + ": negative wait");
    r.line("# " + where + ": wait " + std::to_string(secs) + " s");
    r.advance(static_cast<std::uint64_t>(std::llround(secs * r.tick_rate_)));
  } else if (step.contains("wait_ticks")) {
    const auto n = step["wait_ticks"].get<std::uint64_t>();
    r.line("# " + where + ": wait " + std::to_string(n) + " ticks");
    r.advance(n);
  } else if (step.contains("wait_for_phase")) {
    const auto p = parse_phase(step["wait_for_phase"].get<std::string>());
    if (!p) throw ScriptError(where + ": unknown phase");
    const double secs = number(step, "timeout", 60, where);
    r.line(std::string("# ") + where + ": wait for " + phase_name(*p));
    const auto limit = static_cast<std::uint64_t>(std::llround(secs * r.tick_rate_));
    for (std::uint64_t i = 0; r.phase_.phase != *p; ++i) {
      if (i >= limit) throw AssertionFailed{std::string("phase ") + phase_name(*p) + " not reached in time"};
      r.advance(1);
    }
  } else if (step.contains("expect")) {
    r.line("# " + where + ": expect " + step["expect"].dump());
    check_expect(r, step["expect"], where);
  } else {
    throw ScriptError(where + ": unknown step");
  }
}

}  // namespace

ScenarioResult run_scenario(const AppConfig& base_cfg, const std::string& script_json, const ScenarioOptions& opts) {
  json script;
  try {
    script = json::parse(script_json);
  } catch (const json::parse_error& e) {
    throw ScriptError(std::string("script: ") + e.what());
  }
  if (!script.is_object()) throw ScriptError("script: expected an object with a 'steps' array");
  const json steps = script.value("steps", json::array());
  if (!steps.is_array()) throw ScriptError("script: 'steps' must be an array");

  AppConfig cfg = base_cfg;
  cfg.host = "127.0.0.1";
  cfg.port = 0;
  cfg.ws_port.reset();
  if (opts.seed) {
    cfg.session.seed = *opts.seed;
    cfg.session.reconstruction.train.rng_seed = *opts.seed;
  }
  if (opts.train_iterations) cfg.session.reconstruction.train.iterations = *opts.train_iterations;

  SessionServer server(cfg, load_world(cfg), ClockMode::Lockstep);
  server.start();
  Runner runner(server, cfg.session.tick_rate, opts.batch_timeout);
  ScenarioResult result;
  std::size_t i = 0;
  try {
    for (; i < steps.size(); ++i) {
      std::string where = "step " + std::to_string(i + 1);
      if (steps[i].is_object() && steps[i].contains("name")) where += " (" + steps[i]["name"].get<std::string>() + ")";
      try {
        run_step(runner, steps[i], where);
      } catch (const AssertionFailed& f) {
        result.exit_code = 1;
        result.failure = where + ": " + f.what;
        runner.line("FAIL " + result.failure);
        break;
      } catch (const json::exception& e) {
        throw ScriptError(where + ": " + e.what());
      }
    }
  } catch (...) {
    server.stop();
    throw;
  }
  if (result.exit_code == 0) runner.line("PASS " + std::to_string(steps.size()) + " steps");
  server.stop();
  result.transcript = std::move(runner.transcript);
  return result;
}

}  // namespace splatop
