#include "splatop/protocol/websocket.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <sstream>

namespace splatop::ws {

namespace {

constexpr const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

[[noreturn]] void violation(const std::string& what) {
  throw ProtocolError(ProtocolError::Code::Transport, "websocket: " + what);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string accept_key(const std::string& client_key) {
  const std::string in = client_key + kGuid;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(in.data()), in.size(), digest);
  unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<const char*>(out), n);
}

Bytes encode(Opcode op, std::span<const std::uint8_t> payload, std::optional<std::uint32_t> mask) {
  Bytes out;
  out.reserve(payload.size() + 14);
  out.push_back(static_cast<std::uint8_t>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::uint64_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<std::uint8_t>(mask_bit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(mask_bit | 126);
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
  } else {
    out.push_back(mask_bit | 127);
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  }
  if (!mask) {
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
  }
  std::uint8_t key[4];
  for (int i = 0; i < 4; ++i) key[i] = static_cast<std::uint8_t>(*mask >> (8 * (3 - i)));
  out.insert(out.end(), key, key + 4);
  for (std::size_t i = 0; i < payload.size(); ++i) out.push_back(payload[i] ^ key[i % 4]);
  return out;
}

void Parser::feed(std::span<const std::uint8_t> data) {
  if (start_ > 0 && start_ * 2 >= buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(start_));
    start_ = 0;
  }
  buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Message> Parser::next() {
  for (;;) {
    const std::size_t avail = buf_.size() - start_;
    const std::uint8_t* p = buf_.data() + start_;
    if (avail < 2) return std::nullopt;
    const bool fin = p[0] & 0x80;
    if (p[0] & 0x70) violation("reserved bits set");
    const auto op = static_cast<Opcode>(p[0] & 0x0F);
    const bool masked = p[1] & 0x80;
    std::uint64_t len = p[1] & 0x7F;
    std::size_t hdr = 2;
    if (len == 126) {
      if (avail < 4) return std::nullopt;
      len = (static_cast<std::uint64_t>(p[2]) << 8) | p[3];
      hdr = 4;
    } else if (len == 127) {
      if (avail < 10) return std::nullopt;
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | p[2 + i];
      hdr = 10;
    }
    if (require_mask_ && !masked) violation("client frame not masked");
    if (len > max_message_) violation("message too large");
    if (masked) hdr += 4;
    if (avail < hdr + len) return std::nullopt;

    Bytes payload(p + hdr, p + hdr + len);
    if (masked) {
      const std::uint8_t* key = p + hdr - 4;
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] ^= key[i % 4];
    }
    start_ += hdr + len;

    switch (op) {
      case Opcode::Close:
      case Opcode::Ping:
      case Opcode::Pong:
        if (!fin || len > 125) violation("bad control frame");
        return Message{op, std::move(payload)};
      case Opcode::Text:
      case Opcode::Binary:
        if (partial_op_) violation("new data message inside a fragmented one");
        if (fin) return Message{op, std::move(payload)};
        partial_op_ = op;
        partial_ = std::move(payload);
        break;
      case Opcode::Continuation:
        if (!partial_op_) violation("continuation without a started message");
        if (partial_.size() + payload.size() > max_message_) violation("message too large");
        partial_.insert(partial_.end(), payload.begin(), payload.end());
        if (fin) {
          Message m{*partial_op_, std::move(partial_)};
          partial_op_.reset();
          partial_.clear();
          return m;
        }
        break;
      default:
        violation("unknown opcode");
    }
  }
}

std::optional<std::string> upgrade_key(const std::string& request) {
  std::istringstream in(request);
  std::string line;
  if (!std::getline(in, line) || line.rfind("GET ", 0) != 0) return std::nullopt;
  std::optional<std::string> key;
  bool upgrade = false;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string name = lower(trim(line.substr(0, colon)));
    const std::string value = trim(line.substr(colon + 1));
    if (name == "sec-websocket-key") key = value;
    if (name == "upgrade" && lower(value) == "websocket") upgrade = true;
  }
  if (!upgrade) return std::nullopt;
  return key;
}

std::string upgrade_response(const std::string& client_key) {
  return "HTTP/1.1 101 Switching Protocols\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Accept: " +
         accept_key(client_key) + "\r\n\r\n";
}

std::string upgrade_request(const std::string& host, std::uint16_t port, const std::string& client_key) {
  return "GET / HTTP/1.1\r\n"
         "Host: " +
         host + ":" + std::to_string(port) +
         "\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Key: " +
         client_key +
         "\r\n"
         "Sec-WebSocket-Version: 13\r\n\r\n";
}

}  // namespace splatop::ws
