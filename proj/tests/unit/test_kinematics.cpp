#include <gtest/gtest.h>

#include <functional>
#include <numbers>
#include <random>

#include "splatop/robot/kinematics.hpp"
#include "splatop/robot/robot.hpp"
#include "test_support.hpp"

using namespace splatop;

namespace {

constexpr double kPi = std::numbers::pi;

KinematicChain planar_two_link() {
  KinematicChain c;
  Joint a;
  a.name = "a";
  a.lower = -kPi;
  a.upper = kPi;
  Joint b = a;
  b.name = "b";
  b.origin.translation() = Vec3(1, 0, 0);
  c.joints = {a, b};
  c.ee_offset.translation() = Vec3(1, 0, 0);
  return c;
}

KinematicChain lab_arm() { return load_chain_file(testkit::data_path("robots/lab_arm7.json")); }

JointVector random_within(const KinematicChain& c, std::mt19937_64& rng, double margin = 0.0) {
  JointVector q(c.dof());
  for (std::size_t i = 0; i < c.dof(); ++i) {
    const double span = c.joints[i].upper - c.joints[i].lower;
    std::uniform_real_distribution<double> u(c.joints[i].lower + margin * span, c.joints[i].upper - margin * span);
    q[static_cast<long>(i)] = u(rng);
  }
  return q;
}

KinematicsError::Code code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const KinematicsError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected KinematicsError";
  return KinematicsError::Code::InvalidChain;
}

}  // namespace

TEST(ForwardKinematics, ZeroAnglesComposeOrigins) {
  KinematicChain c;
  std::mt19937_64 rng(61);
  Rigid expect = Rigid::Identity();
  for (int i = 0; i < 4; ++i) {
    Joint j;
    j.axis = testkit::random_unit_quat(rng) * Vec3::UnitZ();
    j.origin = make_rigid(testkit::random_unit_quat(rng), Vec3(0.1 * i, -0.2, 0.3));
    c.joints.push_back(j);
    expect = expect * j.origin;
  }
  c.ee_offset = make_rigid(testkit::random_unit_quat(rng), Vec3(0, 0, 0.1));
  expect = expect * c.ee_offset;
  const Rigid fk = forward_kinematics(c, JointVector::Zero(4));
  EXPECT_TRUE(fk.matrix().isApprox(expect.matrix(), 1e-15));
}

TEST(ForwardKinematics, PlanarArmStraight) {
  const Rigid fk = forward_kinematics(planar_two_link(), JointVector::Zero(2));
  EXPECT_EQ(fk.translation(), Vec3(2, 0, 0));
}

TEST(ForwardKinematics, PlanarArmQuarterTurn) {
  const Rigid fk = forward_kinematics(planar_two_link(), Eigen::Vector2d(kPi / 2, 0));
  EXPECT_LT((fk.translation() - Vec3(0, 2, 0)).norm(), 1e-12);
}

TEST(ForwardKinematics, PlanarTrigonometry) {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng);
    const Vec3 p = forward_kinematics(planar_two_link(), Eigen::Vector2d(a, b)).translation();
    EXPECT_LT((p - Vec3(std::cos(a) + std::cos(a + b), std::sin(a) + std::sin(a + b), 0)).norm(), 1e-12);
  }
}

TEST(ForwardKinematics, PrismaticJointTranslatesAlongAxis) {
  KinematicChain c;
  Joint p;
  p.type = JointType::Prismatic;
  p.axis = Vec3::UnitX();
  p.lower = 0.0;
  p.upper = 1.0;
  c.joints = {p};
  EXPECT_LT((forward_kinematics(c, JointVector::Constant(1, 0.25)).translation() - Vec3(0.25, 0, 0)).norm(), 1e-15);
}

TEST(ForwardKinematics, RejectsBadInput) {
  const KinematicChain c = planar_two_link();
  EXPECT_EQ(code_of([&] { forward_kinematics(c, JointVector::Zero(3)); }), KinematicsError::Code::SizeMismatch);
  EXPECT_EQ(code_of([&] { forward_kinematics(c, Eigen::Vector2d(4.0, 0)); }),
            KinematicsError::Code::JointLimitViolation);
  KinematicChain bad = c;
  bad.joints[0].axis = Vec3(1, 1, 0);
  EXPECT_EQ(code_of([&] { validate(bad); }), KinematicsError::Code::InvalidChain);
  bad = c;
  bad.joints[1].lower = bad.joints[1].upper;
  EXPECT_EQ(code_of([&] { validate(bad); }), KinematicsError::Code::InvalidChain);
}

TEST(ForwardKinematics, JacobianMatchesFiniteDifferences) {
  const KinematicChain c = lab_arm();
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 30; ++trial) {
    const JointVector q = random_within(c, rng, 0.01);
    const auto J = geometric_jacobian(c, q);
    for (std::size_t i = 0; i < c.dof(); ++i) {
      const double h = 1e-7;
      JointVector qa = q, qb = q;
      qa[static_cast<long>(i)] += h;
      qb[static_cast<long>(i)] -= h;
      const Rigid Ta = forward_kinematics(c, qa), Tb = forward_kinematics(c, qb);
      const Vec3 dp = (Ta.translation() - Tb.translation()) / (2 * h);
      const Vec3 dw = rotation_log(Ta.linear() * Tb.linear().transpose()) / (2 * h);
      EXPECT_LT((J.col(static_cast<long>(i)).head<3>() - dp).norm(), 1e-6);
      EXPECT_LT((J.col(static_cast<long>(i)).tail<3>() - dw).norm(), 1e-6);
    }
  }
}

TEST(InverseKinematics, TargetAtSeedReturnsSeed) {
  const KinematicChain c = lab_arm();
  const JointVector seed = default_ready_pose(c);
  const Rigid T = forward_kinematics(c, seed);
  const IkResult r = ik_solve(c, {T.translation(), Quat(T.linear())}, seed);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.q, seed);
}

TEST(InverseKinematics, PlanarStraightTarget) {
  const KinematicChain c = planar_two_link();
  const IkResult r = ik_solve(c, {Vec3(2, 0, 0), std::nullopt}, Eigen::Vector2d(0.1, 0.1));
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.position_residual, 1e-4);
  EXPECT_LT((forward_kinematics(c, r.q).translation() - Vec3(2, 0, 0)).norm(), 1e-4);
  // Full extension: |q| ~ sqrt(residual), so "near (0, 0)" at this tolerance.
  EXPECT_LT(r.q.cwiseAbs().maxCoeff(), 0.05);
}

TEST(InverseKinematics, PlanarUnreachableTarget) {
  const IkResult r = ik_solve(planar_two_link(), {Vec3(3, 0, 0), std::nullopt}, Eigen::Vector2d(0.1, 0.1));
  EXPECT_FALSE(r.converged);
  EXPECT_NEAR(r.position_residual, 1.0, 1e-3);
}

TEST(InverseKinematics, SeedOutsideLimitsRejected) {
  EXPECT_EQ(code_of([] { ik_solve(planar_two_link(), {Vec3(1, 1, 0), std::nullopt}, Eigen::Vector2d(5, 0)); }),
            KinematicsError::Code::JointLimitViolation);
}

TEST(InverseKinematics, ReachableTargetsOnLabArm) {
  const KinematicChain c = lab_arm();
  std::mt19937_64 rng(64);
  int ok = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 target = forward_kinematics(c, random_within(c, rng)).translation();
    const IkResult r = ik_solve(c, {target, std::nullopt}, default_ready_pose(c));
    EXPECT_TRUE(c.within_limits(r.q));
    if (r.converged) {
      ++ok;
      EXPECT_LT((forward_kinematics(c, r.q).translation() - target).norm(), 1e-3);
    }
  }
  EXPECT_GE(ok, 27);
}

TEST(InverseKinematics, OrientationTarget) {
  const KinematicChain c = lab_arm();
  std::mt19937_64 rng(65);
  const JointVector truth = random_within(c, rng, 0.2);
  const Rigid T = forward_kinematics(c, truth);
  JointVector seed = truth;
  for (long i = 0; i < seed.size(); ++i) seed[i] += 0.1 * ((i % 2) ? 1 : -1);
  seed = c.clamp(seed);
  const IkResult r = ik_solve(c, {T.translation(), Quat(T.linear())}, seed);
  ASSERT_TRUE(r.converged);
  const Rigid got = forward_kinematics(c, r.q);
  EXPECT_LT((got.translation() - T.translation()).norm(), 1e-4);
  EXPECT_LT(rotation_log(got.linear() * T.linear().transpose()).norm(), 1e-3);
}

TEST(InverseKinematics, NeverLeavesLimits) {
  const KinematicChain c = lab_arm();
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 40; ++trial) {
    const IkResult r = ik_solve(c, {Vec3(u(rng), u(rng), u(rng) + 0.8), std::nullopt}, random_within(c, rng));
    EXPECT_TRUE(c.within_limits(r.q));
  }
}

TEST(TrackJoints, RateLimited) {
  const JointVector cur = Eigen::Vector3d(0, 0, 0);
  const JointVector tgt = Eigen::Vector3d(1, -0.01, 0.5);
  const JointVector next = track_joints(cur, tgt, 1.0, 0.02);
  EXPECT_NEAR(next[0], 0.02, 1e-15);
  EXPECT_NEAR(next[1], -0.01, 1e-15);
  EXPECT_NEAR(next[2], 0.02, 1e-15);
}
