#include "splatop/render/projection.hpp"

#include <algorithm>

namespace splatop {

Jacobian23 projection_jacobian(const Vec3& t, double fx, double fy) {
  const double iz = 1.0 / t.z();
  const double iz2 = iz * iz;
  Jacobian23 J;
  J << fx * iz, 0.0, -fx * t.x() * iz2,
       0.0, fy * iz, -fy * t.y() * iz2;
  return J;
}

JacobianPoint jacobian_point(const Vec3& t, const PinholeCamera& cam) {
  const double limx = kJacobianGuard * 0.5 * cam.width / cam.fx;
  const double limy = kJacobianGuard * 0.5 * cam.height / cam.fy;
  const double rx = t.x() / t.z(), ry = t.y() / t.z();
  JacobianPoint p;
  p.clamped_x = rx < -limx || rx > limx;
  p.clamped_y = ry < -limy || ry > limy;
  p.t = Vec3(p.clamped_x ? std::clamp(rx, -limx, limx) * t.z() : t.x(),
             p.clamped_y ? std::clamp(ry, -limy, limy) * t.z() : t.y(), t.z());
  return p;
}

std::optional<Splat2D> project_gaussian(const Gaussian3D& g, const PinholeCamera& cam) {
  const Vec3 t = cam.pose * g.mean;
  if (!(t.z() > kNearPlane)) return std::nullopt;

  const Mat3 W = cam.pose.linear();
  const Jacobian23 J = projection_jacobian(jacobian_point(t, cam).t, cam.fx, cam.fy);
  const Jacobian23 T = J * W;

  Splat2D s;
  s.mean2d = Vec2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
  s.cov2d = T * covariance_of(g) * T.transpose();
  s.cov2d(0, 1) = s.cov2d(1, 0) = 0.5 * (s.cov2d(0, 1) + s.cov2d(1, 0));
  s.cov2d(0, 0) += kCovDilation;
  s.cov2d(1, 1) += kCovDilation;
  s.depth = t.z();
  s.color = g.color;
  s.opacity = g.opacity;
  return s;
}

}  // namespace splatop
