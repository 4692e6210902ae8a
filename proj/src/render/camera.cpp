#include "splatop/render/camera.hpp"

#include <stdexcept>

namespace splatop {

void validate(const PinholeCamera& cam) {
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) throw std::invalid_argument("camera focal lengths must be positive");
  if (cam.width < 1 || cam.height < 1) throw std::invalid_argument("camera image must be at least 1x1");
  const Mat3 R = cam.pose.linear();
  if (!(R * R.transpose()).isApprox(Mat3::Identity(), 1e-9) || R.determinant() < 0.0)
    throw std::invalid_argument("camera pose rotation is not orthonormal");
}

Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 dir = target - eye;
  if (dir.norm() == 0.0) throw std::invalid_argument("look_at: eye coincides with target");
  const Vec3 forward = dir.normalized();
  const Vec3 right_raw = forward.cross(up);
  if (right_raw.norm() < 1e-12) throw std::invalid_argument("look_at: view direction parallel to up");
  const Vec3 right = right_raw.normalized();
  const Vec3 down = forward.cross(right);
  Mat3 R;
  R.col(0) = right;
  R.col(1) = down;
  R.col(2) = forward;
  return R;
}

Rigid look_at_pose(const Vec3& eye, const Vec3& target, const Vec3& up) {
  return make_rigid(look_at_rotation(eye, target, up), eye).inverse(Eigen::Isometry);
}

}  // namespace splatop
