#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "splatop/core/gaussian.hpp"
#include "splatop/robot/robot.hpp"

namespace splatop {

enum class Phase : std::uint8_t { Locomotion = 0, Reconstructing = 1, Manipulation = 2 };

const char* phase_name(Phase p);
std::optional<Phase> parse_phase(const std::string& name);

struct Drive {
  BaseCommand cmd;
};
struct BeginReconstruction {};
struct AbortReconstruction {};
struct DragTarget {
  EETarget target;  // splat frame
};
struct ReleaseDrag {};
struct SwitchToLocomotion {};

using OperatorCommand =
    std::variant<Drive, BeginReconstruction, AbortReconstruction, DragTarget, ReleaseDrag, SwitchToLocomotion>;

const char* command_name(const OperatorCommand& cmd);

/// Internal event posted by the reconstruction routine. `generation` ties it to
/// the BeginReconstruction that launched it; results from an aborted or
/// superseded run are ignored.
struct CaptureComplete {
  std::uint64_t generation = 0;
  std::shared_ptr<const SplatScene> scene;  // null or empty on failure
  std::string diagnostic;
};

using SessionInput = std::variant<OperatorCommand, CaptureComplete>;

struct SessionState {
  Phase phase = Phase::Locomotion;
  std::shared_ptr<const SplatScene> splat;
  bool splat_stale = false;
  Rigid alignment = Rigid::Identity();  // splat frame -> robot base frame
  double tick_rate = 50.0;
  std::uint64_t generation = 0;
  BaseCommand drive;  // latched; zero outside Locomotion
};

struct Rejected {
  Phase phase;
  std::string command;
  std::string reason;
};

struct Effects {
  std::optional<Rejected> rejected;
  /// Start capture + training for `state.generation`.
  bool launch_reconstruction = false;
  /// Target already mapped into the base frame.
  std::optional<EETarget> ik_target;
  /// Stop tracking and hold the arm where it is.
  bool hold_arm = false;
  /// A stale or failed capture result that did not change the state.
  std::optional<std::string> ignored;
  std::optional<std::string> note;
};

struct Transition {
  SessionState state;
  Effects effects;
};

/// Pure transition function of the two-phase session.
Transition handle_command(const SessionState& state, const OperatorCommand& cmd);
Transition handle_event(const SessionState& state, const CaptureComplete& ev);
Transition handle_input(const SessionState& state, const SessionInput& in);

/// phase = Manipulation implies a non-empty splat.
bool state_valid(const SessionState& state);

}  // namespace splatop
