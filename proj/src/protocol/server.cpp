#include "splatop/protocol/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>

#include "splatop/protocol/topics.hpp"
#include "splatop/protocol/websocket.hpp"

namespace splatop {

namespace {

constexpr auto kSlowSubscriberGrace = std::chrono::milliseconds(25);

[[noreturn]] void transport_error(const std::string& what) {
  throw ProtocolError(ProtocolError::Code::Transport, what);
}

bool send_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

int open_listener(const std::string& host, std::uint16_t port, std::uint16_t& bound) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) transport_error(std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    transport_error("invalid listen address '" + host + "'");
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const int err = errno;
    ::close(fd);
    transport_error("bind " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  if (::listen(fd, 16) < 0) {
    const int err = errno;
    ::close(fd);
    transport_error(std::string("listen: ") + std::strerror(err));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  bound = ntohs(addr.sin_port);
  return fd;
}

}  // namespace

struct Server::Connection {
  std::uint64_t id = 0;
  int fd = -1;
  bool websocket = false;
  std::string peer;

  std::mutex mu;
  std::condition_variable cv;
  std::condition_variable drained;  // writer popped an item
  bool stalled = false;             // writer missed the last grace period
  struct Outbound {
    std::string topic;
    Bytes bytes;       // encoded protocol frame
    bool raw = false;  // already transport-framed (websocket control frames)
  };
  std::deque<Outbound> queue;
  std::map<std::string, std::size_t> per_topic;
  bool closing = false;
  std::map<std::string, Hub::SubscriptionId> subs;

  std::thread reader;
  std::thread writer;
  std::atomic<bool> finished{false};

  ~Connection() {
    if (fd >= 0) ::close(fd);
  }
};

Server::Server(Hub& hub, ServerOptions opts) : hub_(hub), opts_(std::move(opts)) {}

Server::~Server() { stop(); }

void Server::start() {
  if (running_) return;
  listen_fd_ = open_listener(opts_.host, opts_.port, port_);
  if (opts_.ws_port) {
    try {
      ws_listen_fd_ = open_listener(opts_.host, *opts_.ws_port, ws_port_);
    } catch (...) {
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw;
    }
  }
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(listen_fd_, false); });
  if (ws_listen_fd_ >= 0) ws_accept_thread_ = std::thread([this] { accept_loop(ws_listen_fd_, true); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  for (int fd : {listen_fd_, ws_listen_fd_})
    if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
  if (accept_thread_.joinable()) accept_thread_.join();
  if (ws_accept_thread_.joinable()) ws_accept_thread_.join();
  for (int* fd : {&listen_fd_, &ws_listen_fd_})
    if (*fd >= 0) {
      ::close(*fd);
      *fd = -1;
    }
  std::list<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(mu_);
    conns.swap(conns_);
  }
  for (auto& c : conns) {
    detach(*c);
    {
      std::lock_guard lock(c->mu);
      c->closing = true;
    }
    c->cv.notify_all();
    ::shutdown(c->fd, SHUT_RDWR);
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
  }
}

std::size_t Server::client_count() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& c : conns_)
    if (!c->finished) ++n;
  return n;
}

std::vector<std::string> Server::diagnostics() const {
  std::lock_guard lock(mu_);
  return diagnostics_;
}

void Server::note(const std::string& msg) {
  std::lock_guard lock(mu_);
  diagnostics_.push_back(msg);
}

void Server::reap() {
  std::list<std::shared_ptr<Connection>> dead;
  {
    std::lock_guard lock(mu_);
    for (auto it = conns_.begin(); it != conns_.end();) {
      if ((*it)->finished) {
        dead.push_back(*it);
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : dead) {
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
  }
}

void Server::accept_loop(int listen_fd, bool websocket) {
  while (running_) {
    sockaddr_in peer{};
    socklen_t len = sizeof peer;
    const int fd = ::accept(listen_fd, reinterpret_cast<sockaddr*>(&peer), &len);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (!running_) {
      ::close(fd);
      break;
    }
    reap();
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto c = std::make_shared<Connection>();
    c->fd = fd;
    c->websocket = websocket;
    char ip[INET_ADDRSTRLEN] = {0};
    ::inet_ntop(AF_INET, &peer.sin_addr, ip, sizeof ip);
    c->peer = std::string(ip) + ":" + std::to_string(ntohs(peer.sin_port));
    {
      std::lock_guard lock(mu_);
      c->id = next_conn_id_++;
      conns_.push_back(c);
    }
    c->writer = std::thread([this, c] { writer_loop(c); });
    c->reader = std::thread([this, c] { reader_loop(c); });
  }
}

void Server::enqueue(Connection& c, const std::string& topic, const Frame& f) {
  Bytes bytes = encode_frame(f);
  {
    std::unique_lock lock(c.mu);
    if (c.closing) return;
    // A full queue only counts as a slow subscriber once the writer has had
    // a short grace period to drain it. A stalled writer gets no further
    // grace until it makes progress, so publishers are never held up for long.
    if (c.per_topic[topic] >= opts_.queue_limit && !c.stalled) {
      const bool drained = c.drained.wait_for(lock, kSlowSubscriberGrace, [&] {
        return c.closing || c.per_topic[topic] < opts_.queue_limit;
      });
      if (c.closing) return;
      if (!drained) c.stalled = true;
    }
    auto& n = c.per_topic[topic];
    if (n >= opts_.queue_limit) {
      for (auto it = c.queue.begin(); it != c.queue.end(); ++it) {
        if (it->topic == topic) {
          c.queue.erase(it);
          --n;
          ++dropped_;
          break;
        }
      }
    }
    c.queue.push_back({topic, std::move(bytes), false});
    ++n;
  }
  c.cv.notify_one();
}

void Server::detach(Connection& c) {
  std::map<std::string, Hub::SubscriptionId> subs;
  {
    std::lock_guard lock(c.mu);
    subs.swap(c.subs);
  }
  for (const auto& [topic, id] : subs) hub_.unsubscribe(id);
}

void Server::fail(Connection& c, const std::string& why) {
  note("client " + std::to_string(c.id) + " (" + c.peer + ") disconnected: " + why);
  detach(c);
  Frame err{FrameKind::Publish, std::string(topics::kServerError), Bytes(why.begin(), why.end())};
  if (err.payload.size() > 0xFFFF) err.payload.resize(0xFFFF);
  while (!err.payload.empty() && !is_valid_utf8(err.payload)) err.payload.pop_back();
  enqueue(c, err.topic, err);
  {
    std::lock_guard lock(c.mu);
    c.closing = true;
  }
  c.cv.notify_all();
}

void Server::handle_frame(const std::shared_ptr<Connection>& c, Frame f) {
  switch (f.kind) {
    case FrameKind::Ping:
      enqueue(*c, "", Frame{FrameKind::Pong, f.topic, {}});
      return;
    case FrameKind::Pong:
      return;
    case FrameKind::Subscribe: {
      {
        std::lock_guard lock(c->mu);
        if (c->subs.count(f.topic)) return;
      }
      std::weak_ptr<Connection> weak = c;
      const auto id = hub_.subscribe(f.topic, [this, weak](const std::string& topic, const Bytes& payload) {
        if (auto conn = weak.lock()) enqueue(*conn, topic, Frame{FrameKind::Publish, topic, payload});
      });
      bool duplicate = false;
      {
        std::lock_guard lock(c->mu);
        duplicate = !c->subs.emplace(f.topic, id).second;
      }
      if (duplicate) hub_.unsubscribe(id);
      return;
    }
    case FrameKind::Unsubscribe: {
      std::optional<Hub::SubscriptionId> id;
      {
        std::lock_guard lock(c->mu);
        if (auto it = c->subs.find(f.topic); it != c->subs.end()) {
          id = it->second;
          c->subs.erase(it);
        }
      }
      if (id) hub_.unsubscribe(*id);
      return;
    }
    case FrameKind::Publish: {
      const auto* info = topics::find(f.topic);
      if (info && !info->from_operator) {
        const std::string msg = "topic " + f.topic + " is published by the server only";
        enqueue(*c, std::string(topics::kServerError),
                Frame{FrameKind::Publish, std::string(topics::kServerError), Bytes(msg.begin(), msg.end())});
        return;
      }
      if (const std::string why = topics::validate_payload(f.topic, f.payload); !why.empty()) {
        fail(*c, "invalid payload on " + f.topic + ": " + why);
        return;
      }
      hub_.publish(f.topic, f.payload);
      return;
    }
  }
}

void Server::reader_loop(const std::shared_ptr<Connection>& c) {
  std::uint8_t buf[65536];
  FrameDecoder decoder;
  std::optional<ws::Parser> wsp;
  std::string handshake;
  bool upgraded = !c->websocket;
  if (c->websocket) wsp.emplace(true);

  auto deliver_stream = [&]() -> bool {
    for (;;) {
      DecodeResult r = decoder.next();
      if (r.status == DecodeStatus::NeedMoreBytes) return true;
      if (r.status != DecodeStatus::Ok) {
        fail(*c, std::string("malformed frame (") + decode_status_name(r.status) + ")");
        return false;
      }
      handle_frame(c, std::move(r.frame));
    }
  };

  auto deliver_ws = [&]() -> bool {
    try {
      while (auto m = wsp->next()) {
        if (m->opcode == ws::Opcode::Close) {
          std::lock_guard lock(c->mu);
          c->closing = true;
          c->cv.notify_all();
          return false;
        }
        if (m->opcode == ws::Opcode::Ping) {
          const Bytes pong = ws::encode(ws::Opcode::Pong, m->payload);
          std::lock_guard lock(c->mu);
          c->queue.push_back({"", pong, true});
          c->cv.notify_one();
          continue;
        }
        if (m->opcode == ws::Opcode::Pong) continue;
        if (m->opcode != ws::Opcode::Binary) {
          fail(*c, "websocket text messages are not accepted");
          return false;
        }
        DecodeResult r = decode_frame(m->payload);
        if (r.status != DecodeStatus::Ok || r.consumed != m->payload.size()) {
          fail(*c, std::string("malformed frame in websocket message (") +
                       (r.status == DecodeStatus::Ok ? "trailing bytes" : decode_status_name(r.status)) + ")");
          return false;
        }
        handle_frame(c, std::move(r.frame));
      }
    } catch (const ProtocolError& e) {
      fail(*c, e.what());
      return false;
    }
    return true;
  };

  for (;;) {
    const ssize_t n = ::recv(c->fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    const std::span<const std::uint8_t> data(buf, static_cast<std::size_t>(n));
    if (!upgraded) {
      handshake.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
      const auto end = handshake.find("\r\n\r\n");
      if (end == std::string::npos) {
        if (handshake.size() > 16384) {
          fail(*c, "websocket handshake too large");
          break;
        }
        continue;
      }
      const auto key = ws::upgrade_key(handshake.substr(0, end + 4));
      if (!key) {
        note("client " + std::to_string(c->id) + " (" + c->peer + ") sent an invalid websocket upgrade");
        const std::string resp = "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n";
        send_all(c->fd, reinterpret_cast<const std::uint8_t*>(resp.data()), resp.size());
        std::lock_guard lock(c->mu);
        c->closing = true;
        c->cv.notify_all();
        break;
      }
      const std::string resp = ws::upgrade_response(*key);
      // Nothing can be queued before the upgrade, so the writer is idle here.
      send_all(c->fd, reinterpret_cast<const std::uint8_t*>(resp.data()), resp.size());
      upgraded = true;
      const std::string rest = handshake.substr(end + 4);
      wsp->feed(std::span(reinterpret_cast<const std::uint8_t*>(rest.data()), rest.size()));
      if (!deliver_ws()) break;
      continue;
    }
    if (c->websocket) {
      wsp->feed(data);
      if (!deliver_ws()) break;
    } else {
      decoder.feed(data);
      if (!deliver_stream()) break;
    }
  }
  detach(*c);
  {
    std::lock_guard lock(c->mu);
    c->closing = true;
  }
  c->cv.notify_all();
}

void Server::writer_loop(const std::shared_ptr<Connection>& c) {
  for (;;) {
    Connection::Outbound item;
    {
      std::unique_lock lock(c->mu);
      c->cv.wait(lock, [&] { return !c->queue.empty() || c->closing; });
      if (c->queue.empty()) break;
      item = std::move(c->queue.front());
      c->queue.pop_front();
      if (auto it = c->per_topic.find(item.topic); it != c->per_topic.end() && it->second > 0) --it->second;
      c->stalled = false;
    }
    c->drained.notify_all();
    bool ok;
    if (!c->websocket) {
      ok = send_all(c->fd, item.bytes.data(), item.bytes.size());
    } else if (item.raw) {
      ok = send_all(c->fd, item.bytes.data(), item.bytes.size());
    } else {
      const Bytes framed = ws::encode(ws::Opcode::Binary, item.bytes);
      ok = send_all(c->fd, framed.data(), framed.size());
    }
    if (!ok) {
      note("client " + std::to_string(c->id) + " (" + c->peer + ") write failed: " + std::strerror(errno));
      std::lock_guard lock(c->mu);
      c->closing = true;
      c->queue.clear();
      break;
    }
  }
  if (c->websocket) {
    const Bytes close = ws::encode(ws::Opcode::Close, {});
    send_all(c->fd, close.data(), close.size());
  }
  ::shutdown(c->fd, SHUT_RDWR);
  c->finished = true;
}

}  // namespace splatop
