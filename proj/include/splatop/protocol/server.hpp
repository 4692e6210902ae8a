#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "splatop/protocol/frame.hpp"
#include "splatop/protocol/hub.hpp"

namespace splatop {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;                 // 0 picks an ephemeral port
  std::optional<std::uint16_t> ws_port;   // websocket bridge; 0 = ephemeral
  std::size_t queue_limit = 64;           // per topic, per connection
};

/// TCP endpoint (and optional websocket bridge) in front of a Hub. One reader
/// and one writer thread per connection. Outbound queues drop the oldest
/// message of a topic once it holds `queue_limit` messages of that topic and
/// the writer has not drained any within a 25 ms grace period.
class Server {
 public:
  Server(Hub& hub, ServerOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting. Throws ProtocolError(Transport), e.g. when
  /// the address is in use.
  void start();
  void stop();

  std::uint16_t port() const { return port_; }
  std::uint16_t ws_port() const { return ws_port_; }
  std::uint64_t dropped() const { return dropped_.load(); }
  std::size_t client_count() const;
  /// Per-client faults (malformed frames, schema violations, I/O errors).
  std::vector<std::string> diagnostics() const;

 private:
  struct Connection;
  void accept_loop(int listen_fd, bool websocket);
  void reader_loop(const std::shared_ptr<Connection>& c);
  void writer_loop(const std::shared_ptr<Connection>& c);
  void handle_frame(const std::shared_ptr<Connection>& c, Frame f);
  void enqueue(Connection& c, const std::string& topic, const Frame& f);
  void fail(Connection& c, const std::string& why);
  void detach(Connection& c);
  void reap();
  void note(const std::string& msg);

  Hub& hub_;
  ServerOptions opts_;
  int listen_fd_ = -1;
  int ws_listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::uint16_t ws_port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::thread ws_accept_thread_;
  mutable std::mutex mu_;
  std::list<std::shared_ptr<Connection>> conns_;
  std::vector<std::string> diagnostics_;
  std::atomic<std::uint64_t> dropped_{0};
  std::uint64_t next_conn_id_ = 1;
};

/// Blocking client for the TCP endpoint or the websocket bridge.
class Client {
 public:
  enum class Transport { Tcp, WebSocket };

  static std::unique_ptr<Client> connect(const std::string& host, std::uint16_t port,
                                         Transport transport = Transport::Tcp);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void send(const Frame& f);
  /// Sends raw bytes as-is (fault injection in tests).
  void send_raw(std::span<const std::uint8_t> bytes);
  void subscribe(const std::string& topic);
  void unsubscribe(const std::string& topic);
  void publish(const std::string& topic, const Bytes& payload);

  /// Next received frame, or nullopt on timeout or once closed and drained.
  std::optional<Frame> next(std::chrono::milliseconds timeout);
  /// Skips frames until one on `topic` satisfies `pred`.
  std::optional<Frame> wait_for(const std::string& topic, const std::function<bool(const Frame&)>& pred,
                                std::chrono::milliseconds timeout);
  bool connected() const { return connected_.load(); }
  void close();

 private:
  Client(int fd, Transport t);
  void reader_loop();

  int fd_;
  Transport transport_;
  std::atomic<bool> connected_{true};
  std::mutex send_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Frame> inbox_;
  std::thread reader_;
  std::uint32_t mask_state_ = 0x9e3779b9u;
};

}  // namespace splatop
