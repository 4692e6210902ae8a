#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splatop/protocol/frame.hpp"
#include "splatop/render/image.hpp"
#include "splatop/robot/robot.hpp"
#include "splatop/session/session.hpp"

namespace splatop {

// All multi-byte fields are little-endian; reals are IEEE-754 binary64 unless
// noted.

/// Bounds-checked cursor; reads past the end throw ProtocolError(BadPayload).
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  double f64();
  float f32();
  std::span<const std::uint8_t> take(std::size_t n);
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end(const char* what) const;

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f64(double v);
  void f32(float v);
  void bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }
  Bytes out;
};

enum class VideoEncoding : std::uint8_t { RawRgb8 = 0, DepthF32 = 2 };

inline constexpr std::size_t kVideoHeaderBytes = 10;

struct VideoFrame {
  std::uint32_t seq = 0;
  std::uint8_t camera_id = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  VideoEncoding encoding = VideoEncoding::RawRgb8;
  Bytes pixels;  // row-major

  bool operator==(const VideoFrame&) const = default;
};

/// u32 seq, u8 camera_id, u16 width, u16 height, u8 encoding, pixel bytes.
Bytes video_frame_encode(const Image& image, std::uint32_t seq, std::uint8_t camera_id);
Bytes video_frame_encode(const Rgb8Image& image, std::uint32_t seq, std::uint8_t camera_id);
Bytes depth_frame_encode(const DepthImage& depth, std::uint32_t seq, std::uint8_t camera_id);
/// Throws ProtocolError(SizeMismatch) when the pixel section does not match
/// width * height * bytes-per-pixel, BadPayload on an unknown encoding.
VideoFrame video_frame_decode(std::span<const std::uint8_t> payload);
Rgb8Image video_frame_image(const VideoFrame& f);
DepthImage video_frame_depth(const VideoFrame& f);

/// /base/cmd_vel: f64 vx, f64 vy, f64 omega.
Bytes encode_cmd_vel(const BaseCommand& c);
BaseCommand decode_cmd_vel(std::span<const std::uint8_t> p);

/// /arm/target_pose: u32 seq, 3 x f64 position, u8 has_orientation,
/// then 4 x f64 quaternion (w, x, y, z) when the flag is 1.
struct TargetPoseMsg {
  std::uint32_t seq = 0;
  EETarget target;
};
Bytes encode_target_pose(const TargetPoseMsg& m);
TargetPoseMsg decode_target_pose(std::span<const std::uint8_t> p);

/// /session/command: a single code byte.
enum class SessionCommandCode : std::uint8_t {
  BeginReconstruction = 1,
  AbortReconstruction = 2,
  ReleaseDrag = 3,
  SwitchToLocomotion = 4,
};
Bytes encode_session_command(SessionCommandCode c);
SessionCommandCode decode_session_command(std::span<const std::uint8_t> p);
OperatorCommand to_operator_command(SessionCommandCode c);

/// /session/phase: u32 tick, u8 phase, u8 splat_stale, u32 rejected,
/// u32 dropped, u16 length + UTF-8 last diagnostic.
struct PhaseMsg {
  std::uint32_t tick = 0;
  Phase phase = Phase::Locomotion;
  bool splat_stale = false;
  std::uint32_t rejected = 0;
  std::uint32_t dropped = 0;
  std::string diagnostic;

  bool operator==(const PhaseMsg&) const = default;
};
Bytes encode_phase(const PhaseMsg& m);
PhaseMsg decode_phase(std::span<const std::uint8_t> p);

/// /arm/joint_states: u32 seq, f64 timestamp, f64 base x, y, yaw, u8 n,
/// n x f64 joints, u8 ik_status, f64 ik residual, 3 x f64 EE position (world).
struct JointStatesMsg {
  std::uint32_t seq = 0;
  RobotState robot;
  IkStatus ik_status = IkStatus::Idle;
  double ik_residual = 0.0;
  Vec3 ee_position = Vec3::Zero();
};
Bytes encode_joint_states(const JointStatesMsg& m);
JointStatesMsg decode_joint_states(std::span<const std::uint8_t> p);

/// /splat/scene: u32 chunk index, u32 chunk count, then up to 1 MiB of the
/// binary .splat byte string.
inline constexpr std::size_t kSceneChunkBytes = 1u << 20;
struct SceneChunk {
  std::uint32_t index = 0;
  std::uint32_t count = 0;
  Bytes data;
};
std::vector<Bytes> encode_scene_chunks(const Bytes& splat_bytes);
SceneChunk decode_scene_chunk(std::span<const std::uint8_t> p);

/// Reassembles chunked scenes; a chunk with index 0 starts a new scene.
class SceneAssembler {
 public:
  /// Returns the full byte string once the last chunk of a scene arrives.
  std::optional<Bytes> add(const SceneChunk& c);

 private:
  Bytes buf_;
  std::uint32_t expected_ = 0;
  std::uint32_t count_ = 0;
};

/// /session/clock (lockstep servers only): u32 number of ticks to advance.
Bytes encode_clock(std::uint32_t ticks);
std::uint32_t decode_clock(std::span<const std::uint8_t> p);

}  // namespace splatop
