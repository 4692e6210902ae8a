#include "splatop/app/runtime.hpp"

#include <chrono>

#include "splatop/core/splat_io.hpp"
#include "splatop/protocol/payloads.hpp"
#include "splatop/protocol/topics.hpp"

namespace splatop {

namespace {

ServerOptions server_options(const AppConfig& cfg) {
  ServerOptions o;
  o.host = cfg.host;
  o.port = cfg.port;
  o.ws_port = cfg.ws_port;
  return o;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

}  // namespace

SessionServer::SessionServer(const AppConfig& cfg, LoadedWorld world, ClockMode mode)
    : mode_(mode), server_(hub_, server_options(cfg)) {
  SessionConfig sc = cfg.session;
  sc.background_reconstruction = mode == ClockMode::RealTime;
  session_ = std::make_unique<Session>(std::move(world.world), std::move(world.chain), sc, cfg.initial);

  subs_.push_back(hub_.subscribe(std::string(topics::kCmdVel), [this](const std::string&, const Bytes& p) {
    session_->submit(Drive{decode_cmd_vel(p)});
  }));
  subs_.push_back(hub_.subscribe(std::string(topics::kTargetPose), [this](const std::string&, const Bytes& p) {
    session_->submit(DragTarget{decode_target_pose(p).target});
  }));
  subs_.push_back(hub_.subscribe(std::string(topics::kCommand), [this](const std::string&, const Bytes& p) {
    session_->submit(to_operator_command(decode_session_command(p)));
  }));
  if (mode_ == ClockMode::Lockstep) {
    subs_.push_back(hub_.subscribe(std::string(topics::kClock), [this](const std::string&, const Bytes& p) {
      {
        std::lock_guard lock(mu_);
        pending_ticks_ += decode_clock(p);
      }
      cv_.notify_all();
    }));
  }
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
  server_.start();
  // Initial state, latched for late subscribers.
  PhaseMsg m;
  m.phase = session_->state().phase;
  hub_.publish(std::string(topics::kPhase), encode_phase(m));
  thread_ = std::thread([this] { loop(); });
}

void SessionServer::stop() {
  {
    std::lock_guard lock(mu_);
    if (stop_ && !thread_.joinable()) return;
    stop_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  for (auto id : subs_) hub_.unsubscribe(id);
  subs_.clear();
  server_.stop();
}

std::vector<std::string> SessionServer::diagnostics() const {
  std::vector<std::string> out = server_.diagnostics();
  std::lock_guard lock(mu_);
  out.insert(out.end(), events_.begin(), events_.end());
  return out;
}

void SessionServer::loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / session_->config().tick_rate));
  auto next = clock::now();
  for (;;) {
    if (mode_ == ClockMode::Lockstep) {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stop_ || pending_ticks_ > 0; });
      if (stop_) return;
      --pending_ticks_;
    } else {
      std::unique_lock lock(mu_);
      if (cv_.wait_until(lock, next, [&] { return stop_; })) return;
      next += period;
      // After a long stall (e.g. a blocking job), do not burst to catch up.
      if (clock::now() > next + 10 * period) next = clock::now() + period;
    }
    run_tick();
  }
}

void SessionServer::run_tick() {
  const FeedbackPacket pkt = session_->tick();
  {
    std::lock_guard lock(mu_);
    events_.insert(events_.end(), pkt.events.begin(), pkt.events.end());
  }
  publish(pkt);
}

void SessionServer::publish(const FeedbackPacket& pkt) {
  if (pkt.new_splat) {
    const auto chunks = encode_scene_chunks(encode_splat_binary(*pkt.new_splat));
    for (std::size_t i = 0; i < chunks.size(); ++i) hub_.publish(std::string(topics::kScene), chunks[i], i > 0);
  }
  for (const auto& f : pkt.frames) {
    const auto id = static_cast<std::uint8_t>(f.camera);
    const std::string topic(f.camera == CameraId::Base ? topics::kBaseCamera : topics::kEeCamera);
    hub_.publish(topic, video_frame_encode(f.image, f.seq, id));
    if (f.depth) hub_.publish(std::string(topics::kEeDepth), depth_frame_encode(*f.depth, f.seq, id));
  }
  JointStatesMsg js;
  js.seq = ++joint_seq_;
  js.robot = pkt.robot_state;
  js.ik_status = pkt.ik_status;
  js.ik_residual = pkt.ik_residual;
  js.ee_position = pkt.ee_position;
  hub_.publish(std::string(topics::kJointStates), encode_joint_states(js));

  PhaseMsg m;
  m.tick = static_cast<std::uint32_t>(pkt.tick);
  m.phase = pkt.phase;
  m.splat_stale = pkt.splat_stale;
  m.rejected = static_cast<std::uint32_t>(pkt.rejected_total);
  m.dropped = static_cast<std::uint32_t>(server_.dropped());
  m.diagnostic = join(pkt.events);
  hub_.publish(std::string(topics::kPhase), encode_phase(m));
}

}  // namespace splatop
