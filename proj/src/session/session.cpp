#include "splatop/session/session.hpp"

#include <cmath>

#include "splatop/render/render.hpp"

namespace splatop {

Session::Session(SplatScene world, KinematicChain chain, SessionConfig cfg, RobotState initial)
    : world_(std::move(world)), chain_(std::move(chain)), cfg_(std::move(cfg)), robot_(std::move(initial)) {
  validate(chain_);
  if (!(cfg_.tick_rate > 0.0)) throw std::invalid_argument("session: tick_rate must be positive");
  if (cfg_.frame_stride < 1) throw std::invalid_argument("session: frame_stride must be >= 1");
  if (robot_.joints.size() == 0) robot_.joints = default_ready_pose(chain_);
  if (robot_.joints.size() != static_cast<Eigen::Index>(chain_.dof()))
    throw std::invalid_argument("session: initial joint vector does not match the chain");
  state_.tick_rate = cfg_.tick_rate;
}

Session::~Session() {
  if (worker_.joinable()) worker_.join();
}

void Session::submit(const OperatorCommand& cmd) {
  std::lock_guard lock(mu_);
  queue_.emplace_back(cmd);
}

void Session::post_event(CaptureComplete ev) {
  std::lock_guard lock(mu_);
  queue_.emplace_back(std::move(ev));
}

bool Session::reconstruction_running() const {
  std::lock_guard lock(mu_);
  return worker_busy_;
}

void Session::launch_reconstruction() {
  CaptureInputs in;
  in.world = &world_;
  in.chain = &chain_;
  in.robot = robot_;
  in.rig = cfg_.rig;
  in.ik = cfg_.ik;
  in.seed = cfg_.seed ^ state_.generation;
  in.background = cfg_.background;
  const SessionState snapshot = state_;
  const std::uint64_t gen = state_.generation;
  auto job = [this, in, snapshot, gen] {
    CaptureComplete ev;
    ev.generation = gen;
    try {
      ReconstructionResult r = reconstruct(snapshot, in, cfg_.reconstruction);
      ev.diagnostic = r.summary;
      ev.scene = std::make_shared<const SplatScene>(std::move(r.scene));
    } catch (const std::exception& e) {
      ev.diagnostic = e.what();
    }
    return ev;
  };
  if (!cfg_.background_reconstruction) {
    post_event(job());
    return;
  }
  if (worker_.joinable()) worker_.join();
  {
    std::lock_guard lock(mu_);
    worker_busy_ = true;
  }
  worker_ = std::thread([this, job] {
    CaptureComplete ev = job();
    std::lock_guard lock(mu_);
    queue_.emplace_back(std::move(ev));
    worker_busy_ = false;
  });
}

void Session::apply(const SessionInput& in, FeedbackPacket& pkt) {
  Transition t = handle_input(state_, in);
  const bool entered_manipulation = state_.phase != Phase::Manipulation && t.state.phase == Phase::Manipulation;
  state_ = std::move(t.state);
  const Effects& fx = t.effects;
  if (fx.rejected) {
    ++rejected_;
    pkt.events.push_back("rejected: " + fx.rejected->reason);
  }
  if (fx.ignored) pkt.events.push_back("ignored: " + *fx.ignored);
  if (fx.note) pkt.events.push_back(*fx.note);
  if (fx.hold_arm) joint_target_.reset();
  if (fx.ik_target) {
    ++ik_commands_;
    const JointVector seed = joint_target_ ? *joint_target_ : robot_.joints;
    const IkResult r = ik_solve(chain_, *fx.ik_target, seed, cfg_.ik);
    joint_target_ = r.q;
    ik_status_ = r.converged ? IkStatus::Ok : IkStatus::Unconverged;
    ik_residual_ = r.position_residual;
  }
  if (entered_manipulation) pkt.new_splat = state_.splat;
  if (fx.launch_reconstruction) {
    joint_target_.reset();
    pkt.events.push_back("reconstruction started");
    launch_reconstruction();
  }
}

FeedbackPacket Session::tick() { return tick(1.0 / cfg_.tick_rate); }

FeedbackPacket Session::tick(double dt) {
  const double nominal = 1.0 / cfg_.tick_rate;
  if (!(std::abs(dt - nominal) <= 0.1 * nominal))
    throw SessionError(SessionError::Code::InvalidTickInterval, "tick: dt outside 10% of 1/tick_rate");

  FeedbackPacket pkt;
  std::deque<SessionInput> pending;
  {
    std::lock_guard lock(mu_);
    pending.swap(queue_);
  }
  for (const auto& in : pending) apply(in, pkt);

  if (state_.phase == Phase::Locomotion) {
    robot_ = base_step(robot_, clamp_command(state_.drive, cfg_.base_limits), dt);
  } else {
    robot_.timestamp += dt;
  }
  if (joint_target_) robot_.joints = track_joints(robot_.joints, *joint_target_, cfg_.arm_rate, dt);

  ++tick_;
  pkt.tick = tick_;
  pkt.robot_state = robot_;
  pkt.phase = state_.phase;
  pkt.splat_stale = state_.splat_stale;
  pkt.ik_status = ik_status_;
  pkt.ik_residual = ik_residual_;
  pkt.ee_position = ee_world_pose(chain_, robot_).translation();
  pkt.rejected_total = rejected_;

  if (tick_ % static_cast<std::uint64_t>(cfg_.frame_stride) == 0) {
    const SimulatedFrames f = simulate_cameras(world_, chain_, robot_, cfg_.rig, cfg_.background);
    pkt.frames.push_back({CameraId::Base, ++base_seq_, f.base_frame, std::nullopt});
    pkt.frames.push_back({CameraId::EndEffector, ++ee_seq_, f.ee_frame, f.ee_depth});
  }
  return pkt;
}

}  // namespace splatop
