#include "splatop/core/gaussian.hpp"

#include <cmath>

namespace splatop {

void validate(const Gaussian3D& g) {
  if (!g.mean.allFinite()) throw std::invalid_argument("gaussian mean is not finite");
  if (!g.scale.allFinite() || (g.scale.array() <= 0.0).any())
    throw std::invalid_argument("gaussian scale must be finite and strictly positive");
  if (std::abs(g.rotation.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("gaussian rotation is not a unit quaternion");
  if (!(g.opacity >= 0.0 && g.opacity <= 1.0))
    throw std::invalid_argument("gaussian opacity outside [0,1]");
  if (!(g.color.array() >= 0.0).all() || !(g.color.array() <= 1.0).all())
    throw std::invalid_argument("gaussian color outside [0,1]");
}

Mat3 covariance_of(const Gaussian3D& g) {
  const Mat3 R = g.rotation.toRotationMatrix();
  const Mat3 M = R * g.scale.asDiagonal();
  Mat3 sigma = M * M.transpose();
  // Symmetrize exactly; the product is symmetric only up to rounding.
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return sigma;
}

Gaussian3D rotated(const Gaussian3D& g, const Quat& q) {
  Gaussian3D out = g;
  out.mean = q * g.mean;
  out.rotation = (q * g.rotation).normalized();
  return out;
}

SplatScene::SplatScene(std::vector<Gaussian3D> gaussians, std::string frame_id)
    : gaussians_(std::move(gaussians)), frame_id_(std::move(frame_id)) {
  if (frame_id_.empty()) throw std::invalid_argument("scene frame_id must be non-empty");
  for (const auto& g : gaussians_) {
    validate(g);
    bounds_.extend(g.mean);
  }
}

}  // namespace splatop
