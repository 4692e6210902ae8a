#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "splatop/app/config.hpp"

namespace splatop {

/// A malformed script (usage error, exit code 2).
class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> train_iterations;
  /// Wall-clock limit for any single batch of ticks.
  std::chrono::seconds batch_timeout{900};
};

struct ScenarioResult {
  int exit_code = 0;  // 0 all assertions held, 1 assertion failed
  std::string transcript;
  std::string failure;  // names the failing step
};

/// Runs a script against a fresh lockstep server on an ephemeral port, over
/// TCP. Script format (JSON):
///
///   { "steps": [ step, ... ] }   where a step is one of
///   { "cmd": "drive", "vx": .., "vy": .., "omega": .. }
///   { "cmd": "begin_reconstruction" | "abort_reconstruction" | "release_drag" | "switch_to_locomotion" }
///   { "cmd": "drag", "target": [x, y, z], "orientation": [w, x, y, z]? }   (splat frame)
///   { "wait": seconds } | { "wait_ticks": n }
///   { "wait_for_phase": "Manipulation", "timeout": seconds }
///   { "expect": { "phase": name, "base_near": [x, y], "ee_near": [x, y, z], "frame": "world" | "base",
///                 "tol": metres, "last_rejected": bool, "rejected_total": n, "ik_status": "Ok",
///                 "scene_received": bool } }
///
/// Every command step is followed by one tick so its effect is observable.
/// Throws ScriptError on a malformed script and ConfigError / ProtocolError
/// on setup failures.
ScenarioResult run_scenario(const AppConfig& cfg, const std::string& script_json, const ScenarioOptions& opts = {});

}  // namespace splatop
