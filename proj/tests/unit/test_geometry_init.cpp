#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "splatop/recon/errors.hpp"
#include "splatop/recon/geometry_init.hpp"
#include "splatop/render/render.hpp"
#include "test_support.hpp"

using namespace splatop;

namespace {

Ray ray_through(const Vec3& origin, const Vec3& point) { return {origin, (point - origin).normalized()}; }

PinholeCamera looking_at(const Vec3& eye, const Vec3& target, int w = 64, int h = 64, double f = 60) {
  PinholeCamera c;
  c.fx = c.fy = f;
  c.cx = (w - 1) / 2.0;
  c.cy = (h - 1) / 2.0;
  c.width = w;
  c.height = h;
  c.pose = look_at_pose(eye, target);
  return c;
}

struct BaProblem {
  std::vector<Vec3> points;
  std::vector<PinholeCamera> cameras;
  std::vector<Observation> obs;
};

BaProblem synthetic_ba(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  BaProblem p;
  for (int i = 0; i < 20; ++i) p.points.emplace_back(u(rng), u(rng), u(rng));
  p.cameras = {looking_at(Vec3(3, 0, 0.5), Vec3::Zero(), 128, 128, 100),
               looking_at(Vec3(0, 3, 0.8), Vec3::Zero(), 128, 128, 100),
               looking_at(Vec3(-2, -2, 1.0), Vec3::Zero(), 128, 128, 100)};
  for (std::size_t c = 0; c < p.cameras.size(); ++c)
    for (std::size_t i = 0; i < p.points.size(); ++i) p.obs.push_back({i, c, project_point(p.cameras[c], p.points[i])});
  return p;
}

Rigid perturbed(const Rigid& pose, std::mt19937_64& rng, double rad, double m) {
  std::normal_distribution<double> n(0, 1);
  const Vec3 w = Vec3(n(rng), n(rng), n(rng)).normalized() * rad;
  const Vec3 t = Vec3(n(rng), n(rng), n(rng)).normalized() * m;
  Rigid out = pose;
  out.linear() = rotation_exp(w) * pose.linear();
  out.translation() += t;
  return out;
}

}  // namespace

TEST(Triangulate, SymmetricRaysMeetAtPoint) {
  const Vec3 p(0, 0, 5);
  const Vec3 got = triangulate(ray_through(Vec3(1, 0, 0), p), ray_through(Vec3(-1, 0, 0), p));
  EXPECT_LT((got - p).norm(), 1e-9);
}

TEST(Triangulate, IdenticalRaysAreParallel) {
  const Ray r = ray_through(Vec3::Zero(), Vec3(1, 2, 3));
  try {
    triangulate(r, r);
    FAIL();
  } catch (const ReconError& e) {
    EXPECT_EQ(e.code(), ReconError::Code::ParallelRays);
  }
}

TEST(Triangulate, IntersectingRaysGiveIntersection) {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    if ((p - a).normalized().cross((p - b).normalized()).norm() < 1e-3) continue;
    EXPECT_LT((triangulate(ray_through(a, p), ray_through(b, p)) - p).norm(), 1e-9);
  }
}

TEST(Triangulate, SkewRaysGiveMidpoint) {
  const Ray a{Vec3(0, 0, 0), Vec3::UnitX()};
  const Ray b{Vec3(0, 1, 2), Vec3::UnitY()};
  EXPECT_LT((triangulate(a, b) - Vec3(0, 0, 1)).norm(), 1e-12);
}

TEST(PixelRay, ReprojectsToPixel) {
  const PinholeCamera cam = looking_at(Vec3(1, 2, 3), Vec3::Zero());
  const Ray r = pixel_ray(cam, Vec2(10.25, 40.5));
  EXPECT_LT((r.origin - cam.center()).norm(), 1e-12);
  EXPECT_NEAR(r.direction.norm(), 1.0, 1e-12);
  EXPECT_LT((project_point(cam, r.origin + 2.0 * r.direction) - Vec2(10.25, 40.5)).norm(), 1e-9);
}

TEST(SeedScene, OneViewIsInsufficient) {
  PosedImage v;
  v.cam = looking_at(Vec3(0, -2, 0), Vec3::Zero());
  v.image = Image(64, 64);
  v.depth = DepthImage(64, 64);
  try {
    seed_scene({v});
    FAIL();
  } catch (const ReconError& e) {
    EXPECT_EQ(e.code(), ReconError::Code::InsufficientViews);
  }
}

TEST(SeedScene, ConstantDepthPlaneIsCoplanar) {
  std::vector<PosedImage> views;
  for (const Vec3& eye : {Vec3(0, 0, 0), Vec3(0.3, -0.1, 0), Vec3(-0.2, 0.4, 0)}) {
    PosedImage v;
    v.cam = looking_at(Vec3(0, -1, 0), Vec3::Zero());
    v.cam.pose = Rigid::Identity();
    v.cam.pose.translation() = -eye;
    v.image = Image(64, 64);
    v.depth = DepthImage(64, 64);
    std::fill(v.depth->depth.begin(), v.depth->depth.end(), 2.0f);
    views.push_back(v);
  }
  const SplatScene s = seed_scene(views, SeedOptions{.stride = 4});
  ASSERT_EQ(s.size(), 3u * 16 * 16);
  for (const auto& g : s.gaussians()) EXPECT_NEAR(g.mean.z(), 2.0, 1e-6);
}

TEST(SeedScene, SeedsLandOnKnownGaussians) {
  std::mt19937_64 rng(82);
  std::vector<Gaussian3D> truth;
  // Well separated, opaque blobs on a jittered grid.
  for (int i = 0; i < 10; ++i) {
    Gaussian3D g;
    g.mean = Vec3((i % 5) * 0.3 - 0.6, (i / 5) * 0.4 - 0.2, 0.1 * ((i * 7) % 3) - 0.1);
    g.scale = Vec3::Constant(0.04 + 0.01 * (i % 3));
    g.rotation = testkit::random_unit_quat(rng);
    g.opacity = 1.0;
    g.color = Vec3(0.2 + 0.05 * i, 0.5, 0.8 - 0.05 * i);
    truth.push_back(g);
  }
  const SplatScene scene(truth);
  std::vector<PosedImage> views;
  for (int k = 0; k < 6; ++k) {
    const double a = 2 * std::numbers::pi * k / 6;
    PosedImage v;
    v.cam = looking_at(Vec3(2.5 * std::cos(a), 2.5 * std::sin(a), 1.2), Vec3::Zero(), 96, 96, 90);
    v.image = render(scene, v.cam, Vec3::Zero());
    v.depth = render_depth(scene, v.cam);
    views.push_back(v);
  }
  const SplatScene seeds = seed_scene(views, SeedOptions{.stride = 3});
  ASSERT_GT(seeds.size(), 50u);
  for (const auto& s : seeds.gaussians()) {
    std::size_t best = 0;
    double best_d = 1e9;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double d = (truth[i].mean - s.mean).norm();
      if (d < best_d) best_d = d, best = i;
    }
    EXPECT_LE(best_d, 2.0 * truth[best].scale.maxCoeff());
  }
}

TEST(SeedScene, OutputSatisfiesInvariants) {
  std::mt19937_64 rng(83);
  const SplatScene scene = testkit::random_scene(rng, 30, Vec3::Zero(), 0.4);
  std::vector<PosedImage> views;
  for (int k = 0; k < 3; ++k) {
    PosedImage v;
    v.cam = testkit::random_orbit_camera(rng, 48, 48, 2.0, 50);
    v.image = render(scene, v.cam, Vec3::Zero());
    v.depth = render_depth(scene, v.cam);
    views.push_back(v);
  }
  const SeedOptions opts{.stride = 2, .neighbors = 3, .min_scale = 1e-3, .max_scale = 0.5};
  const SplatScene seeds = seed_scene(views, opts, "base_link");
  EXPECT_EQ(seeds.frame_id(), "base_link");
  for (const auto& g : seeds.gaussians()) {
    EXPECT_NO_THROW(validate(g));
    EXPECT_EQ(g.scale.x(), g.scale.y());
    EXPECT_GE(g.scale.x(), opts.min_scale);
    EXPECT_LE(g.scale.x(), opts.max_scale);
    EXPECT_EQ(g.opacity, 0.5);
    EXPECT_EQ(g.rotation.coeffs(), Quat::Identity().coeffs());
  }
}

TEST(SeedScene, ObservationPathTriangulates) {
  const BaProblem p = synthetic_ba(84);
  std::vector<PosedImage> views;
  for (const auto& c : p.cameras) views.push_back({Image(c.width, c.height), std::nullopt, c});
  const SplatScene seeds = seed_scene(views, p.obs);
  ASSERT_EQ(seeds.size(), p.points.size());
  for (std::size_t i = 0; i < p.points.size(); ++i) EXPECT_LT((seeds[i].mean - p.points[i]).norm(), 1e-9);
}

TEST(NeighborDistance, KnownLine) {
  const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(3, 0, 0)};
  const auto d = mean_neighbor_distance(pts, 1);
  EXPECT_DOUBLE_EQ(d[0], 1.0);
  EXPECT_DOUBLE_EQ(d[1], 1.0);
  EXPECT_DOUBLE_EQ(d[2], 2.0);
  const auto d2 = mean_neighbor_distance(pts, 2);
  EXPECT_DOUBLE_EQ(d2[0], 2.0);
  EXPECT_DOUBLE_EQ(d2[2], 2.5);
}

TEST(BundleAdjust, ExactDataIsFixedPoint) {
  const BaProblem p = synthetic_ba(85);
  const auto r = bundle_adjust(p.points, p.cameras, p.obs);
  EXPECT_LT(r.objective.front(), 1e-18);
  EXPECT_LT(r.rms_reprojection, 1e-9);
  for (std::size_t i = 0; i < p.points.size(); ++i) EXPECT_LT((r.points[i] - p.points[i]).norm(), 1e-12);
  for (std::size_t c = 0; c < p.cameras.size(); ++c)
    EXPECT_LT((r.cameras[c].pose.matrix() - p.cameras[c].pose.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BundleAdjust, RecoversPerturbedPoses) {
  BaProblem p = synthetic_ba(86);
  std::mt19937_64 rng(87);
  std::vector<PinholeCamera> start = p.cameras;
  for (std::size_t c = 1; c < start.size(); ++c) start[c].pose = perturbed(start[c].pose, rng, 1e-2, 1e-2);
  const auto r = bundle_adjust(p.points, start, p.obs);
  EXPECT_LT(r.rms_reprojection, 1e-6);
  for (std::size_t k = 1; k < r.objective.size(); ++k) EXPECT_LE(r.objective[k], r.objective[k - 1]);
  EXPECT_GT(r.objective.front(), 1.0);
  // Gauge camera is untouched, bit for bit.
  EXPECT_EQ(r.cameras[0].pose.matrix(), start[0].pose.matrix());
  EXPECT_NEAR(reprojection_objective(r.points, r.cameras, p.obs), r.objective.back(), 1e-12);
}
