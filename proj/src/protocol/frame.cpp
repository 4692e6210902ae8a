#include "splatop/protocol/frame.hpp"

#include <cstring>

namespace splatop {

bool is_valid_utf8(std::span<const std::uint8_t> s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const std::uint8_t c = s[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t n;
    std::uint32_t cp;
    if ((c & 0xE0) == 0xC0) {
      n = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      n = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      n = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (s.size() - i - 1 < n) return false;
    for (std::size_t k = 1; k <= n; ++k) {
      const std::uint8_t cc = s[i + k];
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += n + 1;
  }
  return true;
}

bool is_valid_utf8(const std::string& s) {
  return is_valid_utf8(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

namespace {

bool kind_known(std::uint8_t k) { return k >= 1 && k <= 5; }

bool needs_topic(FrameKind k) {
  return k == FrameKind::Publish || k == FrameKind::Subscribe || k == FrameKind::Unsubscribe;
}

}  // namespace

std::string frame_violation(const Frame& f) {
  if (!kind_known(static_cast<std::uint8_t>(f.kind))) return "unknown frame kind";
  if (f.topic.size() > kMaxTopicBytes) return "topic longer than 255 bytes";
  if (!is_valid_utf8(f.topic)) return "topic is not valid UTF-8";
  if (f.payload.size() > kMaxPayloadBytes) return "payload larger than 16 MiB";
  if (needs_topic(f.kind) && f.topic.empty()) return "topic required for this frame kind";
  if (f.kind != FrameKind::Publish && !f.payload.empty()) return "payload only allowed on PUBLISH";
  return {};
}

void append_frame(Bytes& out, const Frame& f) {
  if (const std::string v = frame_violation(f); !v.empty()) throw ProtocolError(ProtocolError::Code::InvalidFrame, v);
  const std::uint32_t len = static_cast<std::uint32_t>(2 + f.topic.size() + f.payload.size());
  out.reserve(out.size() + kFrameLengthField + len);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.push_back(static_cast<std::uint8_t>(f.kind));
  out.push_back(static_cast<std::uint8_t>(f.topic.size()));
  out.insert(out.end(), f.topic.begin(), f.topic.end());
  out.insert(out.end(), f.payload.begin(), f.payload.end());
}

Bytes encode_frame(const Frame& f) {
  Bytes out;
  append_frame(out, f);
  return out;
}

const char* decode_status_name(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::Ok: return "Ok";
    case DecodeStatus::NeedMoreBytes: return "NeedMoreBytes";
    case DecodeStatus::OversizedFrame: return "OversizedFrame";
    case DecodeStatus::BadKind: return "BadKind";
    case DecodeStatus::BadTopicUtf8: return "BadTopicUtf8";
    case DecodeStatus::MalformedFrame: return "MalformedFrame";
  }
  return "?";
}

DecodeResult decode_frame(std::span<const std::uint8_t> data) {
  DecodeResult r;
  if (data.size() < kFrameLengthField) return r;
  const std::uint32_t len = static_cast<std::uint32_t>(data[0]) | (static_cast<std::uint32_t>(data[1]) << 8) |
                            (static_cast<std::uint32_t>(data[2]) << 16) | (static_cast<std::uint32_t>(data[3]) << 24);
  if (len > kMaxFrameBody) {
    r.status = DecodeStatus::OversizedFrame;
    return r;
  }
  if (len < 2) {
    r.status = DecodeStatus::MalformedFrame;
    return r;
  }
  if (data.size() - kFrameLengthField < len) return r;

  const auto body = data.subspan(kFrameLengthField, len);
  if (!kind_known(body[0])) {
    r.status = DecodeStatus::BadKind;
    return r;
  }
  const std::size_t topic_len = body[1];
  if (topic_len > len - 2) {
    r.status = DecodeStatus::MalformedFrame;
    return r;
  }
  const auto topic = body.subspan(2, topic_len);
  if (!is_valid_utf8(topic)) {
    r.status = DecodeStatus::BadTopicUtf8;
    return r;
  }
  Frame f;
  f.kind = static_cast<FrameKind>(body[0]);
  f.topic.assign(reinterpret_cast<const char*>(topic.data()), topic.size());
  const auto payload = body.subspan(2 + topic_len);
  f.payload.assign(payload.begin(), payload.end());
  if (!frame_violation(f).empty()) {
    r.status = DecodeStatus::MalformedFrame;
    return r;
  }
  r.status = DecodeStatus::Ok;
  r.frame = std::move(f);
  r.consumed = kFrameLengthField + len;
  return r;
}

void FrameDecoder::feed(std::span<const std::uint8_t> data) {
  if (start_ > 0 && start_ * 2 >= buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(start_));
    start_ = 0;
  }
  buf_.insert(buf_.end(), data.begin(), data.end());
}

DecodeResult FrameDecoder::next() {
  if (error_ != DecodeStatus::Ok) {
    DecodeResult r;
    r.status = error_;
    return r;
  }
  DecodeResult r = decode_frame(std::span(buf_).subspan(start_));
  if (r.status == DecodeStatus::Ok) {
    start_ += r.consumed;
  } else if (r.status != DecodeStatus::NeedMoreBytes) {
    error_ = r.status;
  }
  return r;
}

}  // namespace splatop
