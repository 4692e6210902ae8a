#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace splatop::topics {

inline constexpr std::string_view kCmdVel = "/base/cmd_vel";
inline constexpr std::string_view kBaseCamera = "/base/camera";
inline constexpr std::string_view kEeCamera = "/ee/camera";
inline constexpr std::string_view kEeDepth = "/ee/depth";
inline constexpr std::string_view kTargetPose = "/arm/target_pose";
inline constexpr std::string_view kJointStates = "/arm/joint_states";
inline constexpr std::string_view kPhase = "/session/phase";
inline constexpr std::string_view kCommand = "/session/command";
inline constexpr std::string_view kScene = "/splat/scene";
inline constexpr std::string_view kClock = "/session/clock";
inline constexpr std::string_view kServerError = "/server/error";

struct TopicInfo {
  std::string_view name;
  bool from_operator;  // published by clients rather than the server
  bool latched;        // last message replayed to new subscribers
};

const std::vector<TopicInfo>& table();
const TopicInfo* find(std::string_view name);

/// Empty when the payload matches the topic's schema or the topic is not in
/// the table (unknown topics are relayed unchecked); otherwise the reason.
std::string validate_payload(std::string_view topic, std::span<const std::uint8_t> payload);

}  // namespace splatop::topics
