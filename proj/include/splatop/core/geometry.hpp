#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace splatop {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Rigid = Eigen::Isometry3d;

inline Rigid make_rigid(const Quat& q, const Vec3& t) {
  Rigid T = Rigid::Identity();
  T.linear() = q.normalized().toRotationMatrix();
  T.translation() = t;
  return T;
}

inline Rigid make_rigid(const Mat3& R, const Vec3& t) {
  Rigid T = Rigid::Identity();
  T.linear() = R;
  T.translation() = t;
  return T;
}

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Rotation vector (axis * angle) of a rotation matrix.
Vec3 rotation_log(const Mat3& R);

/// Rotation matrix from a rotation vector.
Mat3 rotation_exp(const Vec3& w);

inline Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return S;
}

}  // namespace splatop
