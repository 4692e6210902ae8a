#include "splatop/protocol/topics.hpp"

#include "splatop/protocol/payloads.hpp"

namespace splatop::topics {

const std::vector<TopicInfo>& table() {
  static const std::vector<TopicInfo> t = {
      {kCmdVel, true, false},      {kBaseCamera, false, false}, {kEeCamera, false, false},
      {kEeDepth, false, false},    {kTargetPose, true, false},  {kJointStates, false, false},
      {kPhase, false, true},       {kCommand, true, false},     {kScene, false, true},
      {kClock, true, false},       {kServerError, false, false},
  };
  return t;
}

const TopicInfo* find(std::string_view name) {
  for (const auto& t : table())
    if (t.name == name) return &t;
  return nullptr;
}

std::string validate_payload(std::string_view topic, std::span<const std::uint8_t> p) {
  try {
    if (topic == kCmdVel) {
      decode_cmd_vel(p);
    } else if (topic == kBaseCamera || topic == kEeCamera) {
      if (video_frame_decode(p).encoding != VideoEncoding::RawRgb8) return "expected an RGB8 video frame";
    } else if (topic == kEeDepth) {
      if (video_frame_decode(p).encoding != VideoEncoding::DepthF32) return "expected a depth frame";
    } else if (topic == kTargetPose) {
      decode_target_pose(p);
    } else if (topic == kJointStates) {
      decode_joint_states(p);
    } else if (topic == kPhase) {
      decode_phase(p);
    } else if (topic == kCommand) {
      decode_session_command(p);
    } else if (topic == kScene) {
      decode_scene_chunk(p);
    } else if (topic == kClock) {
      decode_clock(p);
    } else if (topic == kServerError) {
      if (!is_valid_utf8(p)) return "diagnostic is not UTF-8";
    }
  } catch (const ProtocolError& e) {
    return e.what();
  }
  return {};
}

}  // namespace splatop::topics
