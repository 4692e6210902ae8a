#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "splatop/core/gaussian.hpp"

namespace splatop {

using Bytes = std::vector<std::uint8_t>;

class SplatFormatError : public std::runtime_error {
 public:
  enum class Code {
    TruncatedRecord,
    NonFiniteValue,
    InvalidValue,
    ZeroQuaternion,
    MissingProperty,
    MalformedHeader,
  };

  SplatFormatError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Size of one record in the binary `.splat` layout.
inline constexpr std::size_t kSplatRecordSize = 32;

/// SH band-0 constant used by the PLY color convention.
inline constexpr double kShC0 = 0.28209479177387814;

/// Decodes concatenated 32-byte records:
///   [0,12)  mean xyz as f32
///   [12,24) scale xyz as f32 (linear)
///   [24,28) RGBA u8, A carries opacity
///   [28,32) rotation wxyz u8, decoded as (b - 128) / 128 then renormalized
SplatScene load_splat_binary(std::span<const std::uint8_t> bytes, std::string frame_id = "world");

/// Inverse of load_splat_binary up to quantization of color, opacity and
/// rotation. Rotation bytes are the nearest byte vector that decodes back to
/// itself, so a second encode of a loaded scene is byte-identical.
Bytes encode_splat_binary(const SplatScene& scene);

/// Quantizes one rotation to its stable 4-byte code.
std::array<std::uint8_t, 4> encode_rotation_bytes(const Quat& q);
Quat decode_rotation_bytes(const std::array<std::uint8_t, 4>& b);

/// Binary little-endian PLY with x,y,z, f_dc_0..2, opacity (logit),
/// scale_0..2 (natural log), rot_0..3 (wxyz). Unknown properties are skipped.
SplatScene load_ply(std::span<const std::uint8_t> bytes, std::string frame_id = "world");
Bytes save_ply(const SplatScene& scene);

/// Dispatches on extension (.splat or .ply).
SplatScene load_scene_file(const std::string& path);
void save_scene_file(const SplatScene& scene, const std::string& path);

Bytes read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace splatop
