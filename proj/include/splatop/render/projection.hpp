#pragma once

#include <optional>

#include "splatop/core/gaussian.hpp"
#include "splatop/render/camera.hpp"

namespace splatop {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovDilation = 0.3;
inline constexpr double kAlphaMax = 0.99;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kTransmittanceMin = 1e-4;
inline constexpr double kSingularDeterminant = 1e-12;

/// A Gaussian projected onto the image plane.
struct Splat2D {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
};

using Jacobian23 = Eigen::Matrix<double, 2, 3>;

/// Jacobian of (fx x/z + cx, fy y/z + cy) at camera-frame point t.
Jacobian23 projection_jacobian(const Vec3& t, double fx, double fy);

/// Lateral guard band for the covariance Jacobian, in multiples of the
/// half field of view.
inline constexpr double kJacobianGuard = 1.3;

/// The point at which the covariance Jacobian is evaluated: t with x/z and
/// y/z clamped to the guard band. Without it, splats far outside the frustum
/// but close in depth blow up into frame-filling ellipses.
struct JacobianPoint {
  Vec3 t = Vec3::Zero();
  bool clamped_x = false;
  bool clamped_y = false;
};
JacobianPoint jacobian_point(const Vec3& t, const PinholeCamera& cam);

/// EWA projection: cov2d = J W Sigma W^T J^T + 0.3 I with J evaluated at
/// jacobian_point(t). Returns nullopt (culled) when the mean is at or behind
/// the 0.01 m near plane.
std::optional<Splat2D> project_gaussian(const Gaussian3D& g, const PinholeCamera& cam);

}  // namespace splatop
