#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "splatop/session/capture.hpp"
#include "splatop/session/state_machine.hpp"

namespace splatop {

enum class CameraId : std::uint8_t { Base = 0, EndEffector = 1 };

struct CameraFrame {
  CameraId camera = CameraId::Base;
  std::uint32_t seq = 0;
  Image image;
  std::optional<DepthImage> depth;
};

enum class IkStatus : std::uint8_t { Idle = 0, Ok = 1, Unconverged = 2 };

struct FeedbackPacket {
  std::uint64_t tick = 0;
  RobotState robot_state;
  Phase phase = Phase::Locomotion;
  bool splat_stale = false;
  std::vector<CameraFrame> frames;  // only on frame-stride ticks
  IkStatus ik_status = IkStatus::Idle;
  double ik_residual = 0.0;
  Vec3 ee_position = Vec3::Zero();  // world frame
  std::uint64_t rejected_total = 0;
  std::vector<std::string> events;  // rejections, reconstruction notes, ...
  /// Set on the tick the session enters Manipulation with a new splat.
  std::shared_ptr<const SplatScene> new_splat;
};

struct SessionConfig {
  double tick_rate = 50.0;
  int frame_stride = 5;
  BaseLimits base_limits;
  double arm_rate = 1.0;  // rad/s per joint
  CameraRig rig;
  IkConfig ik;
  ReconstructionConfig reconstruction;
  std::uint64_t seed = 0;
  Vec3 background = Vec3::Zero();
  /// Run capture + training on a helper thread; otherwise it runs inside the
  /// tick that launches it and completes on the following tick.
  bool background_reconstruction = false;
};

/// Single-consumer actor around the pure transition function. `submit` may
/// be called from any thread; `tick` must be called from one thread only.
class Session {
 public:
  Session(SplatScene world, KinematicChain chain, SessionConfig cfg, RobotState initial);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void submit(const OperatorCommand& cmd);

  /// Advances by 1 / tick_rate.
  FeedbackPacket tick();
  /// dt must lie within 10% of 1 / tick_rate.
  FeedbackPacket tick(double dt);

  const SessionState& state() const { return state_; }
  const RobotState& robot() const { return robot_; }
  const KinematicChain& chain() const { return chain_; }
  const SessionConfig& config() const { return cfg_; }
  const SplatScene& world() const { return world_; }
  std::uint64_t ticks() const { return tick_; }
  /// Number of IK solves issued so far.
  std::uint64_t ik_commands() const { return ik_commands_; }
  bool reconstruction_running() const;

 private:
  void post_event(CaptureComplete ev);
  void apply(const SessionInput& in, FeedbackPacket& pkt);
  void launch_reconstruction();

  SplatScene world_;
  KinematicChain chain_;
  SessionConfig cfg_;
  SessionState state_;
  RobotState robot_;

  mutable std::mutex mu_;
  std::deque<SessionInput> queue_;
  std::thread worker_;
  bool worker_busy_ = false;

  std::optional<JointVector> joint_target_;
  IkStatus ik_status_ = IkStatus::Idle;
  double ik_residual_ = 0.0;
  std::uint64_t tick_ = 0;
  std::uint64_t rejected_ = 0;
  std::uint64_t ik_commands_ = 0;
  std::uint32_t base_seq_ = 0;
  std::uint32_t ee_seq_ = 0;
};

}  // namespace splatop
