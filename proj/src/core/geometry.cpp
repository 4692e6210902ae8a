#include "splatop/core/geometry.hpp"

#include <cmath>
#include <numbers>

namespace splatop {

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double r = std::remainder(a, 2.0 * pi);  // [-pi, pi]
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

Vec3 rotation_log(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  return aa.axis() * aa.angle();
}

Mat3 rotation_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

}  // namespace splatop
