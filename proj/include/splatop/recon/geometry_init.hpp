#pragma once

#include <optional>
#include <vector>

#include "splatop/core/gaussian.hpp"
#include "splatop/render/camera.hpp"
#include "splatop/render/image.hpp"

namespace splatop {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit length
};

/// Midpoint of the closest-approach segment between two rays. Throws
/// ReconError(ParallelRays) when |cross(da, db)| < 1e-9.
Vec3 triangulate(const Ray& a, const Ray& b);

/// World-space ray through continuous pixel coordinate `pixel`.
Ray pixel_ray(const PinholeCamera& cam, const Vec2& pixel);

/// An image with an exactly known camera and optional depth channel.
struct PosedImage {
  Image image;
  std::optional<DepthImage> depth;
  PinholeCamera cam;
};

struct Observation {
  std::size_t point_index = 0;
  std::size_t camera_index = 0;
  Vec2 pixel = Vec2::Zero();
};

struct SeedOptions {
  int stride = 4;          // one back-projected sample per stride x stride cell
  int neighbors = 3;       // for the mean nearest-neighbor scale
  double min_scale = 1e-3;
  double max_scale = 0.5;
  double opacity = 0.5;
};

/// Depth path: back-projects the center pixel of every stride cell with
/// finite depth. Each seed is isotropic with scale = mean distance to its
/// nearest neighbors (clamped), identity rotation, opacity 0.5, pixel color.
/// Requires >= 2 views, every one carrying depth.
SplatScene seed_scene(const std::vector<PosedImage>& views, const SeedOptions& opts = {},
                      const std::string& frame_id = "world");

/// Depth-free path: triangulates the first two observations (from distinct
/// cameras) of each point index. Color is taken from the first view.
SplatScene seed_scene(const std::vector<PosedImage>& views, const std::vector<Observation>& observations,
                      const SeedOptions& opts = {}, const std::string& frame_id = "world");

/// Mean distance from each point to its k nearest other points.
std::vector<double> mean_neighbor_distance(const std::vector<Vec3>& points, int k);

struct BundleAdjustOptions {
  int iterations = 100;
  double initial_lambda = 1e-3;
};

struct BundleAdjustResult {
  std::vector<Vec3> points;
  std::vector<PinholeCamera> cameras;
  double rms_reprojection = 0.0;   // pixels
  std::vector<double> objective;   // initial value, then each accepted step
  int iterations = 0;
};

/// Levenberg-Marquardt over camera poses (camera 0 held fixed) and points,
/// minimizing total squared reprojection error. Intrinsics are fixed.
BundleAdjustResult bundle_adjust(const std::vector<Vec3>& points, const std::vector<PinholeCamera>& cameras,
                                 const std::vector<Observation>& observations, const BundleAdjustOptions& opts = {});

/// Sum of squared reprojection residuals.
double reprojection_objective(const std::vector<Vec3>& points, const std::vector<PinholeCamera>& cameras,
                              const std::vector<Observation>& observations);

Vec2 project_point(const PinholeCamera& cam, const Vec3& world);

}  // namespace splatop
