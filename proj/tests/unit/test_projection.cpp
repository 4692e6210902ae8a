#include <gtest/gtest.h>

#include <random>

#include "splatop/render/camera.hpp"
#include "splatop/render/projection.hpp"
#include "test_support.hpp"

using namespace splatop;

namespace {

PinholeCamera axis_camera() {
  PinholeCamera cam;
  cam.fx = cam.fy = 100;
  cam.cx = cam.cy = 64;
  return cam;
}

Vec2 pinhole(const Vec3& t, double fx, double fy) { return Vec2(fx * t.x() / t.z(), fy * t.y() / t.z()); }

Jacobian23 central_difference(const Vec3& t, double fx, double fy) {
  Jacobian23 J;
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(t[k]));
    Vec3 a = t, b = t;
    a[k] += h;
    b[k] -= h;
    J.col(k) = (pinhole(a, fx, fy) - pinhole(b, fx, fy)) / (2 * h);
  }
  return J;
}

}  // namespace

TEST(Projection, OnAxisPoint) {
  Gaussian3D g;
  g.mean = Vec3(0, 0, 5);
  const auto s = project_gaussian(g, axis_camera());
  ASSERT_TRUE(s);
  EXPECT_EQ(s->mean2d, Vec2(64, 64));
  EXPECT_EQ(s->depth, 5.0);
}

TEST(Projection, UnitCovarianceOnAxis) {
  Gaussian3D g;
  g.mean = Vec3(0, 0, 5);
  const auto s = project_gaussian(g, axis_camera());
  ASSERT_TRUE(s);
  const Jacobian23 Jfd = central_difference(Vec3(0, 0, 5), 100, 100);
  EXPECT_LT((Jfd.leftCols<2>() - 20.0 * Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-6);
  const Mat2 expect = Jfd * Jfd.transpose() + kCovDilation * Mat2::Identity();
  EXPECT_LT((s->cov2d - expect).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LT((s->cov2d - Vec2(400.3, 400.3).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, BehindCameraIsCulled) {
  Gaussian3D g;
  g.mean = Vec3(0, 0, -1);
  EXPECT_FALSE(project_gaussian(g, axis_camera()));
  g.mean = Vec3(0, 0, kNearPlane);
  EXPECT_FALSE(project_gaussian(g, axis_camera()));
  g.mean = Vec3(0, 0, 2 * kNearPlane);
  EXPECT_TRUE(project_gaussian(g, axis_camera()));
}

TEST(Projection, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> z(0.1, 20.0);
  std::uniform_real_distribution<double> f(20.0, 800.0);
  for (int i = 0; i < 500; ++i) {
    const double depth = z(rng);
    const Vec3 t(u(rng) * depth, u(rng) * depth, depth);
    const double fx = f(rng), fy = f(rng);
    const Jacobian23 J = projection_jacobian(t, fx, fy);
    const Jacobian23 Jfd = central_difference(t, fx, fy);
    const double scale = std::max(1.0, Jfd.cwiseAbs().maxCoeff());
    EXPECT_LT((J - Jfd).cwiseAbs().maxCoeff() / scale, 1e-4) << "t=" << t.transpose();
  }
}

TEST(Projection, CovarianceUsesPoseRotation) {
  // Same Gaussian seen through a rotated camera equals the camera-frame Gaussian
  // seen through an identity camera.
  std::mt19937_64 rng(42);
  for (int i = 0; i < 50; ++i) {
    Gaussian3D g = testkit::random_gaussian(rng, Vec3::Zero(), 0.2);
    PinholeCamera cam = testkit::random_orbit_camera(rng, 128, 128, 3.0, 100);
    const auto a = project_gaussian(g, cam);
    Gaussian3D local = rotated(g, Quat(cam.pose.linear()));
    local.mean = cam.pose * g.mean;
    PinholeCamera id = cam;
    id.pose = Rigid::Identity();
    const auto b = project_gaussian(local, id);
    ASSERT_TRUE(a && b);
    EXPECT_LT((a->mean2d - b->mean2d).norm(), 1e-9);
    EXPECT_LT((a->cov2d - b->cov2d).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, a->cov2d.norm()));
  }
}

TEST(Projection, GuardBandLeavesFrustumPointsAlone) {
  const PinholeCamera cam = axis_camera();
  const Vec3 inside(0.5, -0.5, 1.0);
  const auto p = jacobian_point(inside, cam);
  EXPECT_FALSE(p.clamped_x || p.clamped_y);
  EXPECT_EQ(p.t, inside);
}

TEST(Projection, GuardBandClampsLateralRatio) {
  const PinholeCamera cam = axis_camera();
  const double lim = kJacobianGuard * 0.5 * cam.width / cam.fx;
  const auto p = jacobian_point(Vec3(10.0, -0.1, 1.0), cam);
  EXPECT_TRUE(p.clamped_x);
  EXPECT_FALSE(p.clamped_y);
  EXPECT_NEAR(p.t.x(), lim, 1e-15);
  EXPECT_EQ(p.t.y(), -0.1);
  EXPECT_EQ(p.t.z(), 1.0);
}

TEST(Projection, FarOffFrustumSplatStaysBounded) {
  // A splat beside the camera at shallow depth; without the guard its
  // footprint covers the whole image.
  Gaussian3D g;
  g.mean = Vec3(3.0, 0.0, 0.05);
  g.scale = Vec3::Constant(0.05);
  const auto s = project_gaussian(g, axis_camera());
  ASSERT_TRUE(s);
  const double footprint = 3.0 * std::sqrt(s->cov2d(0, 0));
  EXPECT_GT(s->mean2d.x() - footprint, 128.0);
}
