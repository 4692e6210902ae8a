#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "splatop/core/splat_io.hpp"
#include "splatop/robot/robot.hpp"
#include "test_support.hpp"

using namespace splatop;

namespace {

constexpr double kPi = std::numbers::pi;

KinematicChain lab_arm() { return load_chain_file(testkit::data_path("robots/lab_arm7.json")); }

CameraRig test_rig() {
  CameraRig rig;
  rig.base_mount = make_rigid(Mat3(look_at_rotation(Vec3(0, 0, 0.8), Vec3(1, 0, 0.2))), Vec3(0, 0, 0.8));
  rig.ee_mount = make_rigid(Quat(Eigen::AngleAxisd(0.3, Vec3::UnitX())), Vec3(0, 0.05, -0.05));
  rig.base_intrinsics = {60, 60, 15.5, 11.5, 32, 24};
  rig.ee_intrinsics = {40, 40, 11.5, 7.5, 24, 16};
  return rig;
}

}  // namespace

TEST(BaseStep, ForwardAtZeroYaw) {
  RobotState s;
  const RobotState n = base_step(s, {1, 0, 0}, 0.1);
  EXPECT_DOUBLE_EQ(n.x, 0.1);
  EXPECT_EQ(n.y, 0.0);
  EXPECT_DOUBLE_EQ(n.timestamp, 0.1);
}

TEST(BaseStep, ForwardAtQuarterYaw) {
  RobotState s;
  s.yaw = kPi / 2;
  const RobotState n = base_step(s, {1, 0, 0}, 0.1);
  EXPECT_NEAR(n.y, 0.1, 1e-12);
  EXPECT_NEAR(n.x, 0.0, 1e-12);
}

TEST(BaseStep, HundredStepsOfLiteralRate) {
  // Closed form of the Euler yaw update: 100 * 0.1 * pi/50 = pi/5.
  RobotState s;
  for (int i = 0; i < 100; ++i) s = base_step(s, {0, 0, kPi / 50}, 0.1);
  EXPECT_NEAR(s.yaw, kPi / 5, 1e-9);
  EXPECT_EQ(s.x, 0.0);
  EXPECT_EQ(s.y, 0.0);
}

TEST(BaseStep, FullTurnWrapsToStart) {
  RobotState s;
  s.yaw = 0.4;
  for (int i = 0; i < 100; ++i) s = base_step(s, {0, 0, kPi / 5}, 0.1);
  EXPECT_NEAR(wrap_angle(s.yaw - 0.4), 0.0, 1e-9);
}

TEST(BaseStep, TimeAdditiveWithoutRotation) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    RobotState s;
    s.x = u(rng);
    s.y = u(rng);
    s.yaw = kPi * u(rng);
    const BaseCommand c{u(rng), u(rng), 0.0};
    const RobotState two = base_step(base_step(s, c, 0.03), c, 0.03);
    const RobotState one = base_step(s, c, 0.06);
    EXPECT_NEAR(two.x, one.x, 1e-12);
    EXPECT_NEAR(two.y, one.y, 1e-12);
    EXPECT_EQ(two.yaw, one.yaw);
  }
}

TEST(BaseStep, RotationSplitDiffersByEulerBound) {
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    RobotState s;
    s.yaw = kPi * u(rng);
    const BaseCommand c{u(rng), u(rng), u(rng)};
    const double dt = 0.05;
    const RobotState two = base_step(base_step(s, c, dt), c, dt);
    const RobotState one = base_step(s, c, 2 * dt);
    // Position gap is |v| * |omega| * dt^2 for the explicit Euler update.
    const double bound = std::hypot(c.vx, c.vy) * std::abs(c.omega) * dt * dt + 1e-15;
    EXPECT_LE(std::hypot(two.x - one.x, two.y - one.y), bound * (1 + 1e-9));
    EXPECT_NEAR(wrap_angle(two.yaw - one.yaw), 0.0, 1e-12);
  }
}

TEST(BaseStep, RejectsBadInterval) {
  EXPECT_THROW(base_step(RobotState{}, {}, 0.0), std::invalid_argument);
  EXPECT_THROW(base_step(RobotState{}, {}, 0.2), std::invalid_argument);
}

TEST(BaseStep, CommandClamping) {
  const BaseCommand c = clamp_command({3, -3, 0.5}, {1.0, 0.25});
  EXPECT_EQ(c, (BaseCommand{1, -1, 0.25}));
}

TEST(Cameras, EmptyWorldGivesBackgroundFrames) {
  const KinematicChain chain = lab_arm();
  RobotState s;
  s.joints = default_ready_pose(chain);
  const Vec3 bg(0.1, 0.2, 0.3);
  const SimulatedFrames f = simulate_cameras(SplatScene(), chain, s, test_rig(), bg);
  for (int i = 0; i < f.base_frame.width * f.base_frame.height; ++i)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(f.base_frame.rgb[3 * i + k], static_cast<float>(bg[k]));
  for (int i = 0; i < f.ee_frame.width * f.ee_frame.height; ++i)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(f.ee_frame.rgb[3 * i + k], static_cast<float>(bg[k]));
  for (float d : f.ee_depth.depth) EXPECT_EQ(d, kDepthInfinity);
}

TEST(Cameras, BaseTranslationShiftsCamera) {
  const CameraRig rig = test_rig();
  RobotState s;
  s.yaw = 0.7;
  const Vec3 before = base_camera(s, rig).center();
  s.x += 1.0;
  const Vec3 after = base_camera(s, rig).center();
  EXPECT_LT((after - before - Vec3(1, 0, 0)).norm(), 1e-15);
}

TEST(Cameras, EeCameraIsFkTimesMount) {
  const KinematicChain chain = lab_arm();
  const CameraRig rig = test_rig();
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 100; ++trial) {
    RobotState s;
    std::uniform_real_distribution<double> u(-1, 1);
    s.x = u(rng);
    s.y = u(rng);
    s.yaw = kPi * u(rng);
    s.joints = JointVector(chain.dof());
    for (std::size_t i = 0; i < chain.dof(); ++i) {
      std::uniform_real_distribution<double> q(chain.joints[i].lower, chain.joints[i].upper);
      s.joints[static_cast<long>(i)] = q(rng);
    }
    const Rigid expect = base_pose3d(s) * forward_kinematics(chain, s.joints) * rig.ee_mount;
    const Rigid got = ee_camera(chain, s, rig).camera_to_world();
    EXPECT_LT((got.matrix() - expect.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Cameras, SimulationIsPure) {
  const KinematicChain chain = lab_arm();
  const SplatScene world = load_scene_file(testkit::data_path("worlds/lab.splat"));
  RobotState s;
  s.x = 0.8;
  s.joints = default_ready_pose(chain);
  const SimulatedFrames a = simulate_cameras(world, chain, s, test_rig());
  const SimulatedFrames b = simulate_cameras(world, chain, s, test_rig());
  EXPECT_EQ(a.base_frame, b.base_frame);
  EXPECT_EQ(a.ee_frame, b.ee_frame);
  EXPECT_EQ(a.ee_depth, b.ee_depth);
}

TEST(Chain, ParseErrorsNameTheField) {
  try {
    parse_chain(R"({"joints": [{"name": "j1", "type": "screw", "axis": [0,0,1], "limits": [-1, 1]}]})");
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("type"), std::string::npos);
  }
  EXPECT_THROW(parse_chain(R"({"links": []})"), std::exception);
  EXPECT_THROW(parse_chain(R"({"joints": [{"name": "j", "axis": [0,0,2], "limits": [-1, 1]}]})"), std::exception);
}

TEST(Chain, MissingFileNamesPath) {
  try {
    load_chain_file("/nonexistent/chain.json");
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/chain.json"), std::string::npos);
  }
}

TEST(Chain, BundledArmLoads) {
  const KinematicChain c = lab_arm();
  EXPECT_EQ(c.dof(), 7u);
  EXPECT_TRUE(c.within_limits(default_ready_pose(c)));
}
