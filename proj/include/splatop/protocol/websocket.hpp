#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "splatop/protocol/frame.hpp"

namespace splatop::ws {

/// Sec-WebSocket-Accept value for a client key.
std::string accept_key(const std::string& client_key);

enum class Opcode : std::uint8_t { Continuation = 0x0, Text = 0x1, Binary = 0x2, Close = 0x8, Ping = 0x9, Pong = 0xA };

/// One unfragmented websocket frame. Clients must mask; servers must not.
Bytes encode(Opcode op, std::span<const std::uint8_t> payload, std::optional<std::uint32_t> mask = std::nullopt);

struct Message {
  Opcode opcode = Opcode::Binary;
  Bytes payload;
};

/// Incremental parser that reassembles fragmented data messages. Control
/// frames are returned as they arrive.
class Parser {
 public:
  explicit Parser(bool require_mask, std::size_t max_message = kMaxFrameBody + kFrameLengthField)
      : require_mask_(require_mask), max_message_(max_message) {}

  void feed(std::span<const std::uint8_t> data);
  /// Next complete message; nullopt when more bytes are needed. Throws
  /// ProtocolError(Transport) on a protocol violation.
  std::optional<Message> next();

 private:
  bool require_mask_;
  std::size_t max_message_;
  Bytes buf_;
  std::size_t start_ = 0;
  std::optional<Opcode> partial_op_;
  Bytes partial_;
};

/// Parses an HTTP upgrade request; returns the Sec-WebSocket-Key or nullopt.
std::optional<std::string> upgrade_key(const std::string& request);
std::string upgrade_response(const std::string& client_key);
std::string upgrade_request(const std::string& host, std::uint16_t port, const std::string& client_key);

}  // namespace splatop::ws
