#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "splatop/recon/capture_plan.hpp"
#include "splatop/recon/geometry_init.hpp"
#include "splatop/recon/train.hpp"
#include "splatop/session/state_machine.hpp"

namespace splatop {

class SessionError : public std::runtime_error {
 public:
  enum class Code { TooFewCaptures, InvalidTickInterval };
  SessionError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Everything the capture routine reads. The robot state is a snapshot; the
/// routine moves a copy of the arm and never touches the live state.
struct CaptureInputs {
  const SplatScene* world = nullptr;
  const KinematicChain* chain = nullptr;
  RobotState robot;
  CameraRig rig;
  IkConfig ik;
  std::uint64_t seed = 0;
  int restarts = 20;
  Vec3 background = Vec3::Zero();
};

struct CaptureOutcome {
  /// Camera poses are in the robot base frame (camera.pose is base -> camera).
  std::vector<PosedImage> views;
  std::vector<JointVector> joints;
  std::vector<std::size_t> plan_indices;
  std::size_t skipped = 0;
};

/// Plan poses are camera-to-base transforms. For each, solves 6-D IK for the
/// EE camera (previous solution, ready pose, then seeded random restarts),
/// skipping unreachable poses, and captures EE color + depth at the FK pose.
/// Throws SessionError(TooFewCaptures) with fewer than two reachable poses.
CaptureOutcome run_capture_routine(const SessionState& state, const CaptureInputs& in, const CapturePlan& plan);

struct ReconstructionConfig {
  CapturePlan plan;
  SeedOptions seeding;
  TrainConfig train;
};

struct ReconstructionResult {
  SplatScene scene;  // frame "base_link"
  std::size_t captures = 0;
  std::size_t skipped = 0;
  double final_loss = 0.0;
  std::string summary;
};

/// Capture, depth seeding and training, as one step.
ReconstructionResult reconstruct(const SessionState& state, const CaptureInputs& in, const ReconstructionConfig& cfg);

}  // namespace splatop
