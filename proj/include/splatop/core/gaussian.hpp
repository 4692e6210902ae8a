#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "splatop/core/geometry.hpp"

namespace splatop {

/// One anisotropic Gaussian primitive. Scale is the per-axis standard
/// deviation in meters (linear); rotation is a unit quaternion.
struct Gaussian3D {
  Vec3 mean = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Quat rotation = Quat::Identity();
  double opacity = 1.0;
  Vec3 color = Vec3::Zero();

  bool operator==(const Gaussian3D& o) const {
    return mean == o.mean && scale == o.scale && rotation.coeffs() == o.rotation.coeffs() &&
           opacity == o.opacity && color == o.color;
  }
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const Gaussian3D& g);

/// Sigma = R * S * S^T * R^T.
Mat3 covariance_of(const Gaussian3D& g);

/// Rigidly rotates a Gaussian about the origin (mean and orientation).
Gaussian3D rotated(const Gaussian3D& g, const Quat& q);

class SplatScene {
 public:
  using Bounds = Eigen::AlignedBox3d;

  SplatScene() : frame_id_("world") {}
  explicit SplatScene(std::vector<Gaussian3D> gaussians, std::string frame_id = "world");

  const std::vector<Gaussian3D>& gaussians() const { return gaussians_; }
  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  const Gaussian3D& operator[](std::size_t i) const { return gaussians_[i]; }
  const std::string& frame_id() const { return frame_id_; }
  /// Empty box when the scene has no Gaussians.
  const Bounds& bounds() const { return bounds_; }

  bool operator==(const SplatScene& o) const {
    return frame_id_ == o.frame_id_ && gaussians_ == o.gaussians_;
  }

 private:
  std::vector<Gaussian3D> gaussians_;
  std::string frame_id_;
  Bounds bounds_;
};

}  // namespace splatop
