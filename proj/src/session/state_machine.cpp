#include "splatop/session/state_machine.hpp"

namespace splatop {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Locomotion: return "Locomotion";
    case Phase::Reconstructing: return "Reconstructing";
    case Phase::Manipulation: return "Manipulation";
  }
  return "?";
}

std::optional<Phase> parse_phase(const std::string& name) {
  for (Phase p : {Phase::Locomotion, Phase::Reconstructing, Phase::Manipulation})
    if (name == phase_name(p)) return p;
  return std::nullopt;
}

const char* command_name(const OperatorCommand& cmd) {
  static const char* const names[] = {"Drive",      "BeginReconstruction", "AbortReconstruction",
                                      "DragTarget", "ReleaseDrag",         "SwitchToLocomotion"};
  return names[cmd.index()];
}

namespace {

Transition reject(const SessionState& s, const OperatorCommand& cmd) {
  Transition t{s, {}};
  t.effects.rejected = Rejected{s.phase, command_name(cmd),
                                std::string(command_name(cmd)) + " not accepted in " + phase_name(s.phase)};
  return t;
}

EETarget align(const Rigid& alignment, const EETarget& t) {
  EETarget out;
  out.position = alignment * t.position;
  if (t.orientation) out.orientation = Quat(alignment.linear() * t.orientation->toRotationMatrix());
  return out;
}

}  // namespace

Transition handle_command(const SessionState& s, const OperatorCommand& cmd) {
  switch (s.phase) {
    case Phase::Locomotion:
      if (const auto* d = std::get_if<Drive>(&cmd)) {
        Transition t{s, {}};
        t.state.drive = d->cmd;
        return t;
      }
      if (std::holds_alternative<BeginReconstruction>(cmd)) {
        Transition t{s, {}};
        t.state.phase = Phase::Reconstructing;
        t.state.drive = {};
        t.state.splat.reset();
        t.state.splat_stale = false;
        t.state.generation = s.generation + 1;
        t.effects.launch_reconstruction = true;
        return t;
      }
      break;
    case Phase::Reconstructing:
      if (std::holds_alternative<AbortReconstruction>(cmd)) {
        Transition t{s, {}};
        t.state.phase = Phase::Locomotion;
        t.state.splat.reset();
        t.state.generation = s.generation + 1;
        return t;
      }
      break;
    case Phase::Manipulation:
      if (const auto* d = std::get_if<DragTarget>(&cmd)) {
        Transition t{s, {}};
        t.effects.ik_target = align(s.alignment, d->target);
        return t;
      }
      if (std::holds_alternative<ReleaseDrag>(cmd)) return {s, {}};
      if (std::holds_alternative<SwitchToLocomotion>(cmd)) {
        Transition t{s, {}};
        t.state.phase = Phase::Locomotion;
        t.state.splat_stale = true;
        t.effects.hold_arm = true;
        return t;
      }
      break;
  }
  return reject(s, cmd);
}

Transition handle_event(const SessionState& s, const CaptureComplete& ev) {
  Transition t{s, {}};
  if (s.phase != Phase::Reconstructing || ev.generation != s.generation) {
    t.effects.ignored = "stale capture result (generation " + std::to_string(ev.generation) + ")";
    return t;
  }
  if (!ev.scene || ev.scene->empty()) {
    t.state.phase = Phase::Locomotion;
    t.state.generation = s.generation + 1;
    t.effects.note = "reconstruction failed: " + ev.diagnostic;
    return t;
  }
  t.state.phase = Phase::Manipulation;
  t.state.splat = ev.scene;
  t.state.splat_stale = false;
  if (!ev.diagnostic.empty()) t.effects.note = ev.diagnostic;
  return t;
}

Transition handle_input(const SessionState& s, const SessionInput& in) {
  if (const auto* cmd = std::get_if<OperatorCommand>(&in)) return handle_command(s, *cmd);
  return handle_event(s, std::get<CaptureComplete>(in));
}

bool state_valid(const SessionState& s) {
  if (s.phase == Phase::Manipulation && (!s.splat || s.splat->empty())) return false;
  if (s.phase != Phase::Locomotion && !s.drive.is_zero()) return false;
  return true;
}

}  // namespace splatop
