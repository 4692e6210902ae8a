#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splatop/core/geometry.hpp"

namespace splatop {

using JointVector = Eigen::VectorXd;

enum class JointType { Revolute, Prismatic };

struct Joint {
  std::string name;
  JointType type = JointType::Revolute;
  Vec3 axis = Vec3::UnitZ();
  Rigid origin = Rigid::Identity();  // parent link -> joint frame at q = 0
  double lower = -1.0;
  double upper = 1.0;
};

/// Serial chain rooted at the robot base frame.
struct KinematicChain {
  std::vector<Joint> joints;
  Rigid ee_offset = Rigid::Identity();

  std::size_t dof() const { return joints.size(); }
  JointVector lower_limits() const;
  JointVector upper_limits() const;
  JointVector clamp(const JointVector& q) const;
  bool within_limits(const JointVector& q) const;
};

class KinematicsError : public std::runtime_error {
 public:
  enum class Code { JointLimitViolation, SizeMismatch, InvalidChain };
  KinematicsError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Throws KinematicsError(InvalidChain) on non-unit axes or lower >= upper.
void validate(const KinematicChain& chain);

/// End-effector pose in the chain root frame.
Rigid forward_kinematics(const KinematicChain& chain, const JointVector& q);

/// Geometric Jacobian (rows: linear xyz, angular xyz) of the end effector.
Eigen::Matrix<double, 6, Eigen::Dynamic> geometric_jacobian(const KinematicChain& chain, const JointVector& q);

struct EETarget {
  Vec3 position = Vec3::Zero();
  std::optional<Quat> orientation;
};

struct IkConfig {
  double tol_pos = 1e-4;
  double tol_rot = 1e-3;
  int max_iters = 200;
  double damping = 0.05;
  /// Task-space error is clamped to these norms before each step.
  double max_position_step = 0.1;  // m
  double max_rotation_step = 0.5;  // rad
};

struct IkResult {
  JointVector q;
  bool converged = false;
  double position_residual = 0.0;
  double rotation_residual = 0.0;
  int iterations = 0;
};

/// Damped least squares: dq = J^T (J J^T + lambda^2 I)^-1 e with per-step
/// clamping to joint limits. Position-only unless the target carries an
/// orientation. When unconverged, returns the best iterate seen.
IkResult ik_solve(const KinematicChain& chain, const EETarget& target, const JointVector& seed,
                  const IkConfig& cfg = {});

/// Moves each joint toward `target` by at most max_rate * dt.
JointVector track_joints(const JointVector& current, const JointVector& target, double max_rate, double dt);

}  // namespace splatop
