#include "splatop/session/capture.hpp"

#include <cstdio>
#include <random>

#include "splatop/render/render.hpp"

namespace splatop {

namespace {

std::optional<JointVector> solve_pose(const KinematicChain& chain, const EETarget& target, const JointVector& prev,
                                      const IkConfig& cfg, std::mt19937_64& rng, int restarts) {
  IkResult r = ik_solve(chain, target, prev, cfg);
  if (r.converged) return r.q;
  r = ik_solve(chain, target, default_ready_pose(chain), cfg);
  if (r.converged) return r.q;
  for (int k = 0; k < restarts; ++k) {
    JointVector s(chain.dof());
    for (std::size_t i = 0; i < chain.dof(); ++i) {
      std::uniform_real_distribution<double> u(chain.joints[i].lower, chain.joints[i].upper);
      s[i] = u(rng);
    }
    r = ik_solve(chain, target, s, cfg);
    if (r.converged) return r.q;
  }
  return std::nullopt;
}

}  // namespace

CaptureOutcome run_capture_routine(const SessionState& state, const CaptureInputs& in, const CapturePlan& plan) {
  if (state.phase != Phase::Reconstructing)
    throw std::logic_error("run_capture_routine: session is not reconstructing");
  if (!in.world || !in.chain) throw std::invalid_argument("run_capture_routine: missing world or chain");
  const KinematicChain& chain = *in.chain;
  const Rigid mount_inv = in.rig.ee_mount.inverse(Eigen::Isometry);

  CaptureOutcome out;
  std::mt19937_64 rng(in.seed);
  RobotState arm = in.robot;
  JointVector prev = arm.joints;
  for (std::size_t i = 0; i < plan.poses.size(); ++i) {
    const Rigid ee_goal = plan.poses[i] * mount_inv;
    const EETarget target{ee_goal.translation(), Quat(ee_goal.linear())};
    const auto q = solve_pose(chain, target, prev, in.ik, rng, in.restarts);
    if (!q) {
      ++out.skipped;
      continue;
    }
    prev = *q;
    arm.joints = *q;
    const Rigid cam_in_base = forward_kinematics(chain, *q) * in.rig.ee_mount;
    const PinholeCamera world_cam = ee_camera(chain, arm, in.rig);

    PosedImage view;
    view.image = render(*in.world, world_cam, in.background);
    view.depth = render_depth(*in.world, world_cam);
    view.cam = in.rig.ee_intrinsics.with_pose(cam_in_base.inverse(Eigen::Isometry));
    out.views.push_back(std::move(view));
    out.joints.push_back(*q);
    out.plan_indices.push_back(i);
  }
  if (out.views.size() < 2)
    throw SessionError(SessionError::Code::TooFewCaptures,
                       "capture routine: only " + std::to_string(out.views.size()) + " of " +
                           std::to_string(plan.poses.size()) + " plan poses reachable");
  return out;
}

ReconstructionResult reconstruct(const SessionState& state, const CaptureInputs& in, const ReconstructionConfig& cfg) {
  const CaptureOutcome cap = run_capture_routine(state, in, cfg.plan);
  const SplatScene seeds = seed_scene(cap.views, cfg.seeding, "base_link");
  TrainConfig tc = cfg.train;
  tc.background = in.background;
  TrainResult trained = train_splats(cap.views, seeds, tc);

  ReconstructionResult r{std::move(trained.scene), cap.views.size(), cap.skipped, 0.0, {}};
  if (!trained.loss_trace.empty()) r.final_loss = trained.loss_trace.back();
  char buf[160];
  std::snprintf(buf, sizeof buf, "captured %zu views (%zu skipped), %zu gaussians, final loss %.6g", r.captures,
                r.skipped, r.scene.size(), r.final_loss);
  r.summary = buf;
  if (trained.aborted) r.summary += "; " + trained.diagnostic;
  return r;
}

}  // namespace splatop
