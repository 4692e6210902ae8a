#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "splatop/protocol/server.hpp"
#include "splatop/protocol/websocket.hpp"

namespace splatop {

namespace {

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

}  // namespace

std::unique_ptr<Client> Client::connect(const std::string& host, std::uint16_t port, Transport transport) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    transport_error("resolve " + host + ": " + ::gai_strerror(rc));
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    transport_error(std::string("socket: ") + std::strerror(errno));
  }
  if (::connect(fd, res->ai_addr, res->ai_addrlen) < 0) {
    const int err = errno;
    ::freeaddrinfo(res);
    ::close(fd);
    transport_error("connect " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  ::freeaddrinfo(res);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  if (transport == Transport::WebSocket) {
    const std::string key = "c3BsYXRvcC1jbGllbnQta2V5";  // any 16-byte value, base64
    const std::string req = ws::upgrade_request(host, port, key);
    if (!send_all(fd, reinterpret_cast<const std::uint8_t*>(req.data()), req.size())) {
      ::close(fd);
      transport_error("websocket upgrade: send failed");
    }
    // Read the response byte-by-byte so no frame bytes are consumed.
    std::string resp;
    char ch;
    while (resp.find("\r\n\r\n") == std::string::npos) {
      const ssize_t n = ::recv(fd, &ch, 1, 0);
      if (n <= 0 || resp.size() > 16384) {
        ::close(fd);
        transport_error("websocket upgrade: connection closed during handshake");
      }
      resp.push_back(ch);
    }
    if (resp.rfind("HTTP/1.1 101", 0) != 0 || resp.find(ws::accept_key(key)) == std::string::npos) {
      ::close(fd);
      transport_error("websocket upgrade rejected");
    }
  }
  return std::unique_ptr<Client>(new Client(fd, transport));
}

Client::Client(int fd, Transport t) : fd_(fd), transport_(t) {
  reader_ = std::thread([this] { reader_loop(); });
}

Client::~Client() {
  close();
  if (reader_.joinable()) reader_.join();
  ::close(fd_);
}

void Client::close() {
  if (connected_.exchange(false)) ::shutdown(fd_, SHUT_RDWR);
  cv_.notify_all();
}

void Client::send_raw(std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(send_mu_);
  if (!send_all(fd_, bytes.data(), bytes.size())) transport_error("send failed: connection closed");
}

void Client::send(const Frame& f) {
  const Bytes bytes = encode_frame(f);
  if (transport_ == Transport::Tcp) {
    send_raw(bytes);
    return;
  }
  std::lock_guard lock(send_mu_);
  mask_state_ = mask_state_ * 1664525u + 1013904223u;
  const Bytes framed = ws::encode(ws::Opcode::Binary, bytes, mask_state_);
  if (!send_all(fd_, framed.data(), framed.size())) transport_error("send failed: connection closed");
}

void Client::subscribe(const std::string& topic) { send(Frame{FrameKind::Subscribe, topic, {}}); }
void Client::unsubscribe(const std::string& topic) { send(Frame{FrameKind::Unsubscribe, topic, {}}); }
void Client::publish(const std::string& topic, const Bytes& payload) {
  send(Frame{FrameKind::Publish, topic, payload});
}

void Client::reader_loop() {
  std::uint8_t buf[65536];
  FrameDecoder decoder;
  ws::Parser wsp(false);
  auto push = [&](Frame f) {
    {
      std::lock_guard lock(mu_);
      inbox_.push_back(std::move(f));
    }
    cv_.notify_all();
  };
  bool ok = true;
  while (ok) {
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    const std::span<const std::uint8_t> data(buf, static_cast<std::size_t>(n));
    if (transport_ == Transport::Tcp) {
      decoder.feed(data);
      for (;;) {
        DecodeResult r = decoder.next();
        if (r.status == DecodeStatus::NeedMoreBytes) break;
        if (r.status != DecodeStatus::Ok) {
          ok = false;
          break;
        }
        push(std::move(r.frame));
      }
    } else {
      try {
        wsp.feed(data);
        while (auto m = wsp.next()) {
          if (m->opcode == ws::Opcode::Close) {
            ok = false;
            break;
          }
          if (m->opcode != ws::Opcode::Binary) continue;
          DecodeResult r = decode_frame(m->payload);
          if (r.status != DecodeStatus::Ok || r.consumed != m->payload.size()) {
            ok = false;
            break;
          }
          push(std::move(r.frame));
        }
      } catch (const ProtocolError&) {
        ok = false;
      }
    }
  }
  connected_ = false;
  cv_.notify_all();
}

std::optional<Frame> Client::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !inbox_.empty() || !connected_; });
  if (inbox_.empty()) return std::nullopt;
  Frame f = std::move(inbox_.front());
  inbox_.pop_front();
  return f;
}

std::optional<Frame> Client::wait_for(const std::string& topic, const std::function<bool(const Frame&)>& pred,
                                      std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    auto f = next(left);
    if (!f) return std::nullopt;
    if (f->kind == FrameKind::Publish && f->topic == topic && pred(*f)) return f;
  }
}

}  // namespace splatop
