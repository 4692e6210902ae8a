#include "splatop/protocol/payloads.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace splatop {

namespace {

[[noreturn]] void bad(const std::string& what) { throw ProtocolError(ProtocolError::Code::BadPayload, what); }

}  // namespace

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint16_t ByteReader::u16() {
  const auto b = take(2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t ByteReader::u32() {
  const auto b = take(4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double ByteReader::f64() {
  const auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return std::bit_cast<double>(v);
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (remaining() < n) bad("payload truncated");
  const auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

void ByteReader::expect_end(const char* what) const {
  if (remaining() != 0) bad(std::string(what) + ": trailing bytes");
}

void ByteWriter::u16(std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

namespace {

void video_header(ByteWriter& w, std::uint32_t seq, std::uint8_t camera_id, int width, int height,
                  VideoEncoding enc) {
  if (width < 0 || height < 0 || width > 0xFFFF || height > 0xFFFF)
    throw ProtocolError(ProtocolError::Code::InvalidFrame, "video frame dimensions exceed u16");
  w.u32(seq);
  w.u8(camera_id);
  w.u16(static_cast<std::uint16_t>(width));
  w.u16(static_cast<std::uint16_t>(height));
  w.u8(static_cast<std::uint8_t>(enc));
}

}  // namespace

Bytes video_frame_encode(const Rgb8Image& image, std::uint32_t seq, std::uint8_t camera_id) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3)
    throw ProtocolError(ProtocolError::Code::SizeMismatch, "video frame: pixel buffer does not match dimensions");
  ByteWriter w;
  w.out.reserve(kVideoHeaderBytes + image.pixels.size());
  video_header(w, seq, camera_id, image.width, image.height, VideoEncoding::RawRgb8);
  w.bytes(image.pixels);
  return std::move(w.out);
}

Bytes video_frame_encode(const Image& image, std::uint32_t seq, std::uint8_t camera_id) {
  return video_frame_encode(to_rgb8(image), seq, camera_id);
}

Bytes depth_frame_encode(const DepthImage& depth, std::uint32_t seq, std::uint8_t camera_id) {
  ByteWriter w;
  w.out.reserve(kVideoHeaderBytes + depth.depth.size() * 4);
  video_header(w, seq, camera_id, depth.width, depth.height, VideoEncoding::DepthF32);
  for (float d : depth.depth) w.f32(d);
  return std::move(w.out);
}

VideoFrame video_frame_decode(std::span<const std::uint8_t> payload) {
  if (payload.size() < kVideoHeaderBytes)
    throw ProtocolError(ProtocolError::Code::SizeMismatch, "video frame: shorter than the 10-byte header");
  ByteReader r(payload);
  VideoFrame f;
  f.seq = r.u32();
  f.camera_id = r.u8();
  f.width = r.u16();
  f.height = r.u16();
  const std::uint8_t enc = r.u8();
  std::size_t bpp;
  if (enc == static_cast<std::uint8_t>(VideoEncoding::RawRgb8)) {
    bpp = 3;
  } else if (enc == static_cast<std::uint8_t>(VideoEncoding::DepthF32)) {
    bpp = 4;
  } else {
    bad("video frame: unknown encoding " + std::to_string(enc));
  }
  f.encoding = static_cast<VideoEncoding>(enc);
  const std::size_t expected = static_cast<std::size_t>(f.width) * f.height * bpp;
  if (r.remaining() != expected)
    throw ProtocolError(ProtocolError::Code::SizeMismatch, "video frame: declared " + std::to_string(expected) +
                                                               " pixel bytes, got " + std::to_string(r.remaining()));
  const auto px = r.take(expected);
  f.pixels.assign(px.begin(), px.end());
  return f;
}

Rgb8Image video_frame_image(const VideoFrame& f) {
  if (f.encoding != VideoEncoding::RawRgb8) bad("video frame: not an RGB8 frame");
  return Rgb8Image{f.width, f.height, f.pixels};
}

DepthImage video_frame_depth(const VideoFrame& f) {
  if (f.encoding != VideoEncoding::DepthF32) bad("video frame: not a depth frame");
  DepthImage d(f.width, f.height);
  ByteReader r(f.pixels);
  for (float& v : d.depth) v = r.f32();
  return d;
}

Bytes encode_cmd_vel(const BaseCommand& c) {
  ByteWriter w;
  w.f64(c.vx);
  w.f64(c.vy);
  w.f64(c.omega);
  return std::move(w.out);
}

BaseCommand decode_cmd_vel(std::span<const std::uint8_t> p) {
  ByteReader r(p);
  BaseCommand c{r.f64(), r.f64(), r.f64()};
  r.expect_end("cmd_vel");
  if (!std::isfinite(c.vx) || !std::isfinite(c.vy) || !std::isfinite(c.omega)) bad("cmd_vel: non-finite value");
  return c;
}

Bytes encode_target_pose(const TargetPoseMsg& m) {
  ByteWriter w;
  w.u32(m.seq);
  for (int i = 0; i < 3; ++i) w.f64(m.target.position[i]);
  w.u8(m.target.orientation ? 1 : 0);
  if (m.target.orientation) {
    const Quat& q = *m.target.orientation;
    w.f64(q.w());
    w.f64(q.x());
    w.f64(q.y());
    w.f64(q.z());
  }
  return std::move(w.out);
}

TargetPoseMsg decode_target_pose(std::span<const std::uint8_t> p) {
  ByteReader r(p);
  TargetPoseMsg m;
  m.seq = r.u32();
  for (int i = 0; i < 3; ++i) m.target.position[i] = r.f64();
  if (!m.target.position.allFinite()) bad("target_pose: non-finite position");
  const std::uint8_t flag = r.u8();
  if (flag > 1) bad("target_pose: orientation flag must be 0 or 1");
  if (flag == 1) {
    const double w = r.f64(), x = r.f64(), y = r.f64(), z = r.f64();
    Quat q(w, x, y, z);
    const double n = q.norm();
    if (!std::isfinite(n) || n < 1e-9) bad("target_pose: degenerate quaternion");
    q.normalize();
    m.target.orientation = q;
  }
  r.expect_end("target_pose");
  return m;
}

Bytes encode_session_command(SessionCommandCode c) { return {static_cast<std::uint8_t>(c)}; }

SessionCommandCode decode_session_command(std::span<const std::uint8_t> p) {
  ByteReader r(p);
  const std::uint8_t c = r.u8();
  r.expect_end("session command");
  if (c < 1 || c > 4) bad("session command: unknown code " + std::to_string(c));
  return static_cast<SessionCommandCode>(c);
}

OperatorCommand to_operator_command(SessionCommandCode c) {
  switch (c) {
    case SessionCommandCode::BeginReconstruction: return BeginReconstruction{};
    case SessionCommandCode::AbortReconstruction: return AbortReconstruction{};
    case SessionCommandCode::ReleaseDrag: return ReleaseDrag{};
    case SessionCommandCode::SwitchToLocomotion: return SwitchToLocomotion{};
  }
  bad("session command: unknown code");
}

Bytes encode_phase(const PhaseMsg& m) {
  ByteWriter w;
  w.u32(m.tick);
  w.u8(static_cast<std::uint8_t>(m.phase));
  w.u8(m.splat_stale ? 1 : 0);
  w.u32(m.rejected);
  w.u32(m.dropped);
  std::string diag = m.diagnostic.substr(0, 0xFFFF);
  while (!diag.empty() && !is_valid_utf8(diag)) diag.pop_back();  // never split a code point
  w.u16(static_cast<std::uint16_t>(diag.size()));
  w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(diag.data()), diag.size()));
  return std::move(w.out);
}

PhaseMsg decode_phase(std::span<const std::uint8_t> p) {
  ByteReader r(p);
  PhaseMsg m;
  m.tick = r.u32();
  const std::uint8_t phase = r.u8();
  if (phase > 2) bad("phase: unknown phase " + std::to_string(phase));
  m.phase = static_cast<Phase>(phase);
  const std::uint8_t stale = r.u8();
  if (stale > 1) bad("phase: stale flag must be 0 or 1");
  m.splat_stale = stale == 1;
  m.rejected = r.u32();
  m.dropped = r.u32();
  const auto text = r.take(r.u16());
  if (!is_valid_utf8(text)) bad("phase: diagnostic is not UTF-8");
  m.diagnostic.assign(reinterpret_cast<const char*>(text.data()), text.size());
  r.expect_end("phase");
  return m;
}

Bytes encode_joint_states(const JointStatesMsg& m) {
  if (m.robot.joints.size() > 255) throw ProtocolError(ProtocolError::Code::InvalidFrame, "joint_states: > 255 joints");
  ByteWriter w;
  w.u32(m.seq);
  w.f64(m.robot.timestamp);
  w.f64(m.robot.x);
  w.f64(m.robot.y);
  w.f64(m.robot.yaw);
  w.u8(static_cast<std::uint8_t>(m.robot.joints.size()));
  for (Eigen::Index i = 0; i < m.robot.joints.size(); ++i) w.f64(m.robot.joints[i]);
  w.u8(static_cast<std::uint8_t>(m.ik_status));
  w.f64(m.ik_residual);
  for (int i = 0; i < 3; ++i) w.f64(m.ee_position[i]);
  return std::move(w.out);
}

JointStatesMsg decode_joint_states(std::span<const std::uint8_t> p) {
  ByteReader r(p);
  JointStatesMsg m;
  m.seq = r.u32();
  m.robot.timestamp = r.f64();
  m.robot.x = r.f64();
  m.robot.y = r.f64();
  m.robot.yaw = r.f64();
  const int n = r.u8();
  m.robot.joints.resize(n);
  for (int i = 0; i < n; ++i) m.robot.joints[i] = r.f64();
  const std::uint8_t st = r.u8();
  if (st > 2) bad("joint_states: unknown ik status");
  m.ik_status = static_cast<IkStatus>(st);
  m.ik_residual = r.f64();
  for (int i = 0; i < 3; ++i) m.ee_position[i] = r.f64();
  r.expect_end("joint_states");
  return m;
}

std::vector<Bytes> encode_scene_chunks(const Bytes& splat_bytes) {
  const std::size_t count = std::max<std::size_t>(1, (splat_bytes.size() + kSceneChunkBytes - 1) / kSceneChunkBytes);
  std::vector<Bytes> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(i));
    w.u32(static_cast<std::uint32_t>(count));
    const std::size_t lo = i * kSceneChunkBytes;
    const std::size_t hi = std::min(splat_bytes.size(), lo + kSceneChunkBytes);
    w.bytes(std::span(splat_bytes).subspan(lo, hi - lo));
    out.push_back(std::move(w.out));
  }
  return out;
}

SceneChunk decode_scene_chunk(std::span<const std::uint8_t> p) {
  ByteReader r(p);
  SceneChunk c;
  c.index = r.u32();
  c.count = r.u32();
  if (c.count == 0 || c.index >= c.count) bad("scene chunk: index out of range");
  if (r.remaining() > kSceneChunkBytes) bad("scene chunk: larger than 1 MiB");
  const auto d = r.take(r.remaining());
  c.data.assign(d.begin(), d.end());
  return c;
}

std::optional<Bytes> SceneAssembler::add(const SceneChunk& c) {
  if (c.index == 0) {
    buf_.clear();
    count_ = c.count;
    expected_ = 0;
  }
  if (c.index != expected_ || c.count != count_) {
    buf_.clear();
    expected_ = 0;
    count_ = 0;
    return std::nullopt;
  }
  buf_.insert(buf_.end(), c.data.begin(), c.data.end());
  if (++expected_ == count_) {
    expected_ = 0;
    count_ = 0;
    return std::move(buf_);
  }
  return std::nullopt;
}

Bytes encode_clock(std::uint32_t ticks) {
  ByteWriter w;
  w.u32(ticks);
  return std::move(w.out);
}

std::uint32_t decode_clock(std::span<const std::uint8_t> p) {
  ByteReader r(p);
  const std::uint32_t t = r.u32();
  r.expect_end("clock");
  return t;
}

}  // namespace splatop
