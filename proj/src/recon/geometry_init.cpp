#include "splatop/recon/geometry_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Dense>

#include "splatop/recon/errors.hpp"
#include "splatop/render/projection.hpp"

namespace splatop {

Vec3 triangulate(const Ray& a, const Ray& b) {
  const Vec3 cross = a.direction.cross(b.direction);
  if (cross.norm() < 1e-9) throw ReconError(ReconError::Code::ParallelRays, "triangulate: rays are parallel");
  const Vec3 w0 = a.origin - b.origin;
  const double aa = a.direction.dot(a.direction);
  const double ab = a.direction.dot(b.direction);
  const double bb = b.direction.dot(b.direction);
  const double d = a.direction.dot(w0);
  const double e = b.direction.dot(w0);
  const double denom = aa * bb - ab * ab;
  const double s = (ab * e - bb * d) / denom;
  const double t = (aa * e - ab * d) / denom;
  return 0.5 * ((a.origin + s * a.direction) + (b.origin + t * b.direction));
}

Ray pixel_ray(const PinholeCamera& cam, const Vec2& pixel) {
  const Rigid c2w = cam.camera_to_world();
  const Vec3 dir_cam((pixel.x() - cam.cx) / cam.fx, (pixel.y() - cam.cy) / cam.fy, 1.0);
  return {c2w.translation(), (c2w.linear() * dir_cam).normalized()};
}

std::vector<double> mean_neighbor_distance(const std::vector<Vec3>& points, int k) {
  const std::size_t n = points.size();
  std::vector<double> out(n, 0.0);
  if (n < 2 || k < 1) return out;
  const std::size_t kk = std::min<std::size_t>(k, n - 1);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    std::vector<double> best(kk, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < n; ++j) {
      if (j == static_cast<std::size_t>(i)) continue;
      const double d2 = (points[j] - points[i]).squaredNorm();
      if (d2 < best.back()) {
        best.back() = d2;
        std::sort(best.begin(), best.end());
      }
    }
    double acc = 0.0;
    for (double d2 : best) acc += std::sqrt(d2);
    out[i] = acc / static_cast<double>(kk);
  }
  return out;
}

namespace {

SplatScene assemble(const std::vector<Vec3>& points, const std::vector<Vec3>& colors, const SeedOptions& opts,
                    const std::string& frame_id) {
  const auto nn = mean_neighbor_distance(points, opts.neighbors);
  std::vector<Gaussian3D> gaussians;
  gaussians.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    Gaussian3D g;
    g.mean = points[i];
    const double s = std::clamp(points.size() > 1 ? nn[i] : opts.max_scale, opts.min_scale, opts.max_scale);
    g.scale = Vec3::Constant(s);
    g.rotation = Quat::Identity();
    g.opacity = opts.opacity;
    g.color = colors[i].cwiseMax(0.0).cwiseMin(1.0);
    gaussians.push_back(g);
  }
  return SplatScene(std::move(gaussians), frame_id);
}

Vec3 pixel_color(const Image& img, const Vec2& pixel) {
  const int x = std::clamp(static_cast<int>(std::lround(pixel.x())), 0, img.width - 1);
  const int y = std::clamp(static_cast<int>(std::lround(pixel.y())), 0, img.height - 1);
  const float* p = img.pixel(x, y);
  return {p[0], p[1], p[2]};
}

}  // namespace

SplatScene seed_scene(const std::vector<PosedImage>& views, const SeedOptions& opts, const std::string& frame_id) {
  if (views.size() < 2) throw ReconError(ReconError::Code::InsufficientViews, "seed_scene needs at least 2 views");
  if (opts.stride < 1) throw std::invalid_argument("seed_scene: stride must be >= 1");
  std::vector<Vec3> points, colors;
  for (const PosedImage& v : views) {
    if (!v.depth) throw std::invalid_argument("seed_scene: view without depth; use the observation overload");
    const DepthImage& depth = *v.depth;
    const Rigid c2w = v.cam.camera_to_world();
    for (int cy = 0; cy < depth.height; cy += opts.stride) {
      for (int cx = 0; cx < depth.width; cx += opts.stride) {
        const int x = std::min(cx + opts.stride / 2, depth.width - 1);
        const int y = std::min(cy + opts.stride / 2, depth.height - 1);
        const double z = depth.at(x, y);
        if (!std::isfinite(z) || z <= 0.0) continue;
        const Vec3 p_cam(z * (x - v.cam.cx) / v.cam.fx, z * (y - v.cam.cy) / v.cam.fy, z);
        points.push_back(c2w * p_cam);
        const float* px = v.image.pixel(x, y);
        colors.emplace_back(px[0], px[1], px[2]);
      }
    }
  }
  return assemble(points, colors, opts, frame_id);
}

SplatScene seed_scene(const std::vector<PosedImage>& views, const std::vector<Observation>& observations,
                      const SeedOptions& opts, const std::string& frame_id) {
  if (views.size() < 2) throw ReconError(ReconError::Code::InsufficientViews, "seed_scene needs at least 2 views");
  std::map<std::size_t, std::vector<const Observation*>> by_point;
  for (const Observation& o : observations) {
    if (o.camera_index >= views.size()) throw std::out_of_range("observation camera index out of range");
    by_point[o.point_index].push_back(&o);
  }
  std::vector<Vec3> points, colors;
  for (const auto& [index, obs] : by_point) {
    const Observation* first = obs.front();
    const auto second = std::find_if(obs.begin() + 1, obs.end(),
                                     [&](const Observation* o) { return o->camera_index != first->camera_index; });
    if (second == obs.end()) continue;
    try {
      points.push_back(triangulate(pixel_ray(views[first->camera_index].cam, first->pixel),
                                   pixel_ray(views[(*second)->camera_index].cam, (*second)->pixel)));
    } catch (const ReconError&) {
      continue;
    }
    colors.push_back(pixel_color(views[first->camera_index].image, first->pixel));
  }
  return assemble(points, colors, opts, frame_id);
}

Vec2 project_point(const PinholeCamera& cam, const Vec3& world) {
  const Vec3 t = cam.pose * world;
  return {cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy};
}

double reprojection_objective(const std::vector<Vec3>& points, const std::vector<PinholeCamera>& cameras,
                              const std::vector<Observation>& observations) {
  double acc = 0.0;
  for (const Observation& o : observations)
    acc += (project_point(cameras[o.camera_index], points[o.point_index]) - o.pixel).squaredNorm();
  return acc;
}

BundleAdjustResult bundle_adjust(const std::vector<Vec3>& points, const std::vector<PinholeCamera>& cameras,
                                 const std::vector<Observation>& observations, const BundleAdjustOptions& opts) {
  const std::size_t n_cam = cameras.size(), n_pt = points.size();
  if (n_cam == 0) throw std::invalid_argument("bundle_adjust: no cameras");
  std::vector<int> seen(n_cam, 0);
  for (const Observation& o : observations) {
    if (o.camera_index >= n_cam || o.point_index >= n_pt)
      throw std::out_of_range("bundle_adjust: observation index out of range");
    ++seen[o.camera_index];
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument("bundle_adjust: every camera must observe at least one point");

  // Parameter layout: [cam 1..n-1: (dw, dt)] [points].
  const int cam_params = 6 * static_cast<int>(n_cam - 1);
  const int n_params = cam_params + 3 * static_cast<int>(n_pt);
  auto cam_offset = [&](std::size_t c) { return 6 * (static_cast<int>(c) - 1); };
  auto pt_offset = [&](std::size_t p) { return cam_params + 3 * static_cast<int>(p); };

  BundleAdjustResult res{points, cameras, 0.0, {}, 0};
  double cost = reprojection_objective(res.points, res.cameras, observations);
  res.objective.push_back(cost);
  double lambda = opts.initial_lambda;

  for (int it = 0; it < opts.iterations && cost > 0.0; ++it) {
    res.iterations = it + 1;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n_params, n_params);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_params);
    for (const Observation& o : observations) {
      const PinholeCamera& cam = res.cameras[o.camera_index];
      const Vec3 X = res.points[o.point_index];
      const Vec3 RX = cam.pose.linear() * X;
      const Vec3 Xc = RX + cam.pose.translation();
      const Jacobian23 Jp = projection_jacobian(Xc, cam.fx, cam.fy);
      const Vec2 r = Vec2(cam.fx * Xc.x() / Xc.z() + cam.cx, cam.fy * Xc.y() / Xc.z() + cam.cy) - o.pixel;

      Eigen::Matrix<double, 2, Eigen::Dynamic> J = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, n_params);
      if (o.camera_index != 0) {
        const int c = cam_offset(o.camera_index);
        J.block<2, 3>(0, c) = Jp * (-skew(RX));
        J.block<2, 3>(0, c + 3) = Jp;
      }
      J.block<2, 3>(0, pt_offset(o.point_index)) = Jp * cam.pose.linear();
      H.noalias() += J.transpose() * J;
      g.noalias() += J.transpose() * r;
    }
    if (g.lpNorm<Eigen::Infinity>() == 0.0) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::MatrixXd A = H;
      A.diagonal() += lambda * H.diagonal().cwiseMax(1e-12);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      const Eigen::VectorXd delta = ldlt.solve(-g);
      if (ldlt.info() != Eigen::Success || !delta.allFinite())
        throw ReconError(ReconError::Code::SingularNormalEquations,
                         "bundle_adjust: singular normal equations at iteration " + std::to_string(it));

      auto cams = res.cameras;
      auto pts = res.points;
      for (std::size_t c = 1; c < n_cam; ++c) {
        const int off = cam_offset(c);
        cams[c].pose.linear() = rotation_exp(delta.segment<3>(off)) * cams[c].pose.linear();
        cams[c].pose.translation() += delta.segment<3>(off + 3);
      }
      for (std::size_t p = 0; p < n_pt; ++p) pts[p] += delta.segment<3>(pt_offset(p));
      const double new_cost = reprojection_objective(pts, cams, observations);
      if (std::isfinite(new_cost) && new_cost < cost) {
        res.cameras = std::move(cams);
        res.points = std::move(pts);
        cost = new_cost;
        res.objective.push_back(cost);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
  }
  res.rms_reprojection = observations.empty() ? 0.0 : std::sqrt(cost / static_cast<double>(observations.size()));
  return res;
}

}  // namespace splatop
