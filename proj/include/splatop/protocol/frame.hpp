#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace splatop {

using Bytes = std::vector<std::uint8_t>;

enum class FrameKind : std::uint8_t { Publish = 1, Subscribe = 2, Unsubscribe = 3, Ping = 4, Pong = 5 };

inline constexpr std::size_t kMaxTopicBytes = 255;
inline constexpr std::size_t kMaxPayloadBytes = 16u << 20;
inline constexpr std::size_t kFrameLengthField = 4;
/// Largest legal value of the length field: kind + topic length + topic + payload.
inline constexpr std::size_t kMaxFrameBody = 2 + kMaxTopicBytes + kMaxPayloadBytes;

struct Frame {
  FrameKind kind = FrameKind::Ping;
  std::string topic;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

class ProtocolError : public std::runtime_error {
 public:
  enum class Code { InvalidFrame, SizeMismatch, BadPayload, UnknownTopic, Transport };
  ProtocolError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

bool is_valid_utf8(std::span<const std::uint8_t> s);
bool is_valid_utf8(const std::string& s);

/// Empty when valid, otherwise the violated rule.
std::string frame_violation(const Frame& f);

/// Throws ProtocolError(InvalidFrame) on an invalid frame.
Bytes encode_frame(const Frame& f);
void append_frame(Bytes& out, const Frame& f);

enum class DecodeStatus { Ok, NeedMoreBytes, OversizedFrame, BadKind, BadTopicUtf8, MalformedFrame };

const char* decode_status_name(DecodeStatus s);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMoreBytes;
  Frame frame;               // valid when status == Ok
  std::size_t consumed = 0;  // non-zero only when status == Ok
};

/// Decodes one frame from the front of `data`. Never reads outside `data`.
/// Errors other than NeedMoreBytes are fatal for the stream.
DecodeResult decode_frame(std::span<const std::uint8_t> data);

/// Incremental decoder over a byte stream.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> data);
  /// Next complete frame, NeedMoreBytes, or a stream error (sticky).
  DecodeResult next();
  std::size_t buffered() const { return buf_.size() - start_; }

 private:
  Bytes buf_;
  std::size_t start_ = 0;
  DecodeStatus error_ = DecodeStatus::Ok;
};

}  // namespace splatop
