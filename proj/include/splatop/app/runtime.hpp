#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "splatop/app/config.hpp"
#include "splatop/protocol/hub.hpp"
#include "splatop/protocol/server.hpp"

namespace splatop {

enum class ClockMode {
  RealTime,  // ticks at tick_rate
  Lockstep,  // ticks only when a client publishes /session/clock
};

/// A Session wired to a Hub and a protocol Server. Operator topics feed the
/// session queue; every tick publishes /arm/joint_states and /session/phase,
/// frame-stride ticks publish the camera topics, and entering Manipulation
/// publishes the reconstructed scene on /splat/scene.
class SessionServer {
 public:
  SessionServer(const AppConfig& cfg, LoadedWorld world, ClockMode mode);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Binds the listeners and starts the tick loop. Throws ProtocolError.
  void start();
  void stop();

  std::uint16_t port() const { return server_.port(); }
  std::uint16_t ws_port() const { return server_.ws_port(); }
  Hub& hub() { return hub_; }
  Server& server() { return server_; }
  /// Diagnostics accumulated by the protocol layer and the session.
  std::vector<std::string> diagnostics() const;

 private:
  void loop();
  void run_tick();
  void publish(const FeedbackPacket& pkt);

  ClockMode mode_;
  Hub hub_;
  Server server_;
  std::unique_ptr<Session> session_;
  std::vector<Hub::SubscriptionId> subs_;

  std::thread thread_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::uint64_t pending_ticks_ = 0;
  std::vector<std::string> events_;
  std::uint32_t joint_seq_ = 0;
};

}  // namespace splatop
