#include "splatop/robot/kinematics.hpp"

#include <cmath>
#include <limits>

namespace splatop {
namespace {

Rigid joint_motion(const Joint& j, double q) {
  Rigid m = Rigid::Identity();
  if (j.type == JointType::Revolute)
    m.linear() = Eigen::AngleAxisd(q, j.axis).toRotationMatrix();
  else
    m.translation() = j.axis * q;
  return m;
}

void check_size(const KinematicChain& chain, const JointVector& q) {
  if (static_cast<std::size_t>(q.size()) != chain.dof())
    throw KinematicsError(KinematicsError::Code::SizeMismatch,
                          "expected " + std::to_string(chain.dof()) + " joint values, got " + std::to_string(q.size()));
}

void check_limits(const KinematicChain& chain, const JointVector& q) {
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const auto& j = chain.joints[i];
    if (!(q[i] >= j.lower && q[i] <= j.upper))
      throw KinematicsError(KinematicsError::Code::JointLimitViolation,
                            "joint '" + j.name + "' value " + std::to_string(q[i]) + " outside [" +
                                std::to_string(j.lower) + ", " + std::to_string(j.upper) + "]");
  }
}

// Joint frames (after origin, before motion) and the end-effector pose.
struct ChainFrames {
  std::vector<Rigid> joint;
  Rigid ee;
};

ChainFrames chain_frames(const KinematicChain& chain, const JointVector& q) {
  ChainFrames f;
  f.joint.reserve(chain.dof());
  Rigid T = Rigid::Identity();
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    T = T * chain.joints[i].origin;
    f.joint.push_back(T);
    T = T * joint_motion(chain.joints[i], q[i]);
  }
  f.ee = T * chain.ee_offset;
  return f;
}

}  // namespace

JointVector KinematicChain::lower_limits() const {
  JointVector v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].lower;
  return v;
}

JointVector KinematicChain::upper_limits() const {
  JointVector v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].upper;
  return v;
}

JointVector KinematicChain::clamp(const JointVector& q) const {
  return q.cwiseMax(lower_limits()).cwiseMin(upper_limits());
}

bool KinematicChain::within_limits(const JointVector& q) const {
  if (static_cast<std::size_t>(q.size()) != dof()) return false;
  for (std::size_t i = 0; i < dof(); ++i)
    if (!(q[i] >= joints[i].lower && q[i] <= joints[i].upper)) return false;
  return true;
}

void validate(const KinematicChain& chain) {
  for (const auto& j : chain.joints) {
    if (std::abs(j.axis.norm() - 1.0) > 1e-9)
      throw KinematicsError(KinematicsError::Code::InvalidChain, "joint '" + j.name + "' axis is not unit length");
    if (!(j.lower < j.upper))
      throw KinematicsError(KinematicsError::Code::InvalidChain, "joint '" + j.name + "' has lower >= upper");
  }
}

Rigid forward_kinematics(const KinematicChain& chain, const JointVector& q) {
  check_size(chain, q);
  check_limits(chain, q);
  return chain_frames(chain, q).ee;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> geometric_jacobian(const KinematicChain& chain, const JointVector& q) {
  check_size(chain, q);
  const auto f = chain_frames(chain, q);
  Eigen::Matrix<double, 6, Eigen::Dynamic> J(6, chain.dof());
  const Vec3 p_ee = f.ee.translation();
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const Vec3 z = f.joint[i].linear() * chain.joints[i].axis;
    if (chain.joints[i].type == JointType::Revolute) {
      J.col(i).head<3>() = z.cross(p_ee - f.joint[i].translation());
      J.col(i).tail<3>() = z;
    } else {
      J.col(i).head<3>() = z;
      J.col(i).tail<3>().setZero();
    }
  }
  return J;
}

IkResult ik_solve(const KinematicChain& chain, const EETarget& target, const JointVector& seed, const IkConfig& cfg) {
  check_size(chain, seed);
  check_limits(chain, seed);
  const bool with_rot = target.orientation.has_value();
  const int rows = with_rot ? 6 : 3;
  const Mat3 R_target = with_rot ? target.orientation->normalized().toRotationMatrix() : Mat3::Identity();

  IkResult best;
  double best_score = std::numeric_limits<double>::infinity();
  JointVector q = seed;

  for (int it = 0;; ++it) {
    const auto f = chain_frames(chain, q);
    Eigen::VectorXd e(rows);
    e.head<3>() = target.position - f.ee.translation();
    if (with_rot) e.tail<3>() = rotation_log(R_target * f.ee.linear().transpose());
    const double pos_err = e.head<3>().norm();
    const double rot_err = with_rot ? e.tail<3>().norm() : 0.0;
    const double score = pos_err + rot_err;
    if (score < best_score) {
      best_score = score;
      best = {q, false, pos_err, rot_err, it};
    }
    if (pos_err < cfg.tol_pos && rot_err < cfg.tol_rot) {
      return {q, true, pos_err, rot_err, it};
    }
    if (it >= cfg.max_iters) break;

    const auto J6 = geometric_jacobian(chain, q);
    const Eigen::MatrixXd J = J6.topRows(rows);
    Eigen::MatrixXd A = J * J.transpose();
    A.diagonal().array() += cfg.damping * cfg.damping;
    // Clamp the task-space step so far targets do not overshoot near singularities.
    Eigen::VectorXd step = e;
    if (pos_err > cfg.max_position_step) step.head<3>() *= cfg.max_position_step / pos_err;
    if (with_rot && rot_err > cfg.max_rotation_step) step.tail<3>() *= cfg.max_rotation_step / rot_err;
    const Eigen::VectorXd dq = J.transpose() * A.ldlt().solve(step);
    q = chain.clamp(q + dq);
  }
  best.iterations = cfg.max_iters;
  return best;
}

JointVector track_joints(const JointVector& current, const JointVector& target, double max_rate, double dt) {
  const double step = max_rate * dt;
  return current + (target - current).cwiseMax(-step).cwiseMin(step);
}

}  // namespace splatop
