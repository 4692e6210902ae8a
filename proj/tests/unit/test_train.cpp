#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "fd_check.hpp"
#include "splatop/recon/train.hpp"
#include "splatop/render/render.hpp"
#include "test_support.hpp"

using namespace splatop;

namespace {

PinholeCamera orbit(double angle, double height, double dist, int size, double f) {
  PinholeCamera c;
  c.fx = c.fy = f;
  c.cx = c.cy = (size - 1) / 2.0;
  c.width = c.height = size;
  c.pose = look_at_pose(Vec3(dist * std::cos(angle), dist * std::sin(angle), height), Vec3::Zero());
  return c;
}

std::vector<PosedImage> render_views(const SplatScene& truth, const std::vector<PinholeCamera>& cams,
                                     const Vec3& bg = Vec3::Zero()) {
  std::vector<PosedImage> out;
  for (const auto& c : cams) out.push_back({render(truth, c, bg), std::nullopt, c});
  return out;
}

Gaussian3D blob() {
  Gaussian3D g;
  g.scale = Vec3(0.12, 0.08, 0.1);
  g.rotation = Quat(Eigen::AngleAxisd(0.4, Vec3(1, 1, 0).normalized()));
  g.opacity = 0.8;
  g.color = Vec3(0.9, 0.4, 0.2);
  return g;
}

}  // namespace

TEST(TrainParams, RoundTrip) {
  std::mt19937_64 rng(91);
  const SplatScene s = testkit::random_scene(rng, 10);
  const SplatScene back = to_scene(to_params(s), "world");
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LT((back[i].mean - s[i].mean).norm(), 1e-15);
    EXPECT_LT((back[i].scale - s[i].scale).norm(), 1e-12);
    EXPECT_LT(std::abs(std::abs(back[i].rotation.dot(s[i].rotation)) - 1.0), 1e-12);
    EXPECT_NEAR(back[i].opacity, s[i].opacity, 1e-9);
    EXPECT_EQ(back[i].color, s[i].color);
  }
}

TEST(TrainParams, IndexedAccessCoversAllFields) {
  GaussianParams p;
  for (int k = 0; k < GaussianParams::kCount; ++k) p[k] = k + 1;
  EXPECT_EQ(p.mean, Vec3(1, 2, 3));
  EXPECT_EQ(p.log_scale, Vec3(4, 5, 6));
  EXPECT_EQ(p.rotation, Eigen::Vector4d(7, 8, 9, 10));
  EXPECT_EQ(p.opacity_logit, 11);
  EXPECT_EQ(p.color, Vec3(12, 13, 14));
}

TEST(EvaluateView, ForwardMatchesRenderer) {
  std::mt19937_64 rng(92);
  for (int trial = 0; trial < 5; ++trial) {
    const SplatScene s = testkit::random_scene(rng, 20, Vec3::Zero(), 0.4);
    const PinholeCamera cam = testkit::random_orbit_camera(rng, 40, 32, 2.0, 40);
    const Vec3 bg(0.1, 0.0, 0.3);
    PosedImage view{Image(cam.width, cam.height), std::nullopt, cam};
    const ViewEvaluation e = evaluate_view(to_params(s), view, bg, nullptr);
    const Image r = render(to_scene(to_params(s), "world"), cam, bg);
    EXPECT_TRUE(testkit::bits_equal(e.rendered.rgb, r.rgb));
    EXPECT_NEAR(e.loss, mse(r, view.image), 1e-7);
  }
}

TEST(EvaluateView, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(93);
  for (int trial = 0; trial < 3; ++trial) {
    const SplatScene truth = testkit::random_scene(rng, 3, Vec3::Zero(), 0.3);
    const SplatScene guess = testkit::random_scene(rng, 3, Vec3::Zero(), 0.3);
    std::vector<PinholeCamera> cams;
    for (int k = 0; k < 2; ++k) cams.push_back(orbit(2.0 * k + trial, 0.4, 1.6, 32, 30));
    const auto views = render_views(truth, cams);
    const auto check = testkit::check_gradients(to_params(guess), views, Vec3::Zero(), 1e-3, 1e-9);
    EXPECT_EQ(check.failed, 0) << "worst " << check.worst_rel;
    EXPECT_LE(check.unstable, check.checked / 20);
  }
}

TEST(Train, ZeroIterationsReturnsInit) {
  const SplatScene init({blob()});
  const auto views = render_views(init, {orbit(0, 0.3, 1.5, 24, 20)});
  TrainConfig cfg;
  cfg.iterations = 0;
  const TrainResult r = train_splats(views, init, cfg);
  EXPECT_EQ(r.scene, init);
  EXPECT_TRUE(r.loss_trace.empty());
  EXPECT_FALSE(r.aborted);
}

TEST(Train, RecoversOffsetMean) {
  const Gaussian3D truth = blob();
  std::vector<PinholeCamera> cams;
  for (int k = 0; k < 3; ++k) cams.push_back(orbit(2 * std::numbers::pi * k / 3, 0.5, 1.5, 48, 50));
  const auto views = render_views(SplatScene({truth}), cams);
  Gaussian3D start = truth;
  start.mean += Vec3(0.06, -0.05, 0.055);
  ASSERT_NEAR((start.mean - truth.mean).norm(), 0.1, 5e-3);
  TrainConfig cfg;
  cfg.iterations = 400;
  const TrainResult r = train_splats(views, SplatScene({start}), cfg);
  ASSERT_FALSE(r.aborted) << r.diagnostic;
  double final_mse = 0;
  for (const auto& v : views) final_mse += mse(render(r.scene, v.cam, Vec3::Zero()), v.image);
  final_mse /= views.size();
  EXPECT_LT(final_mse, 1e-4);
  EXPECT_LT((r.scene[0].mean - truth.mean).norm(), 1e-2);
}

TEST(Train, DeterministicGivenSeed) {
  std::mt19937_64 rng(94);
  const SplatScene truth = testkit::random_scene(rng, 6, Vec3::Zero(), 0.3);
  const SplatScene init = testkit::random_scene(rng, 6, Vec3::Zero(), 0.3);
  std::vector<PinholeCamera> cams;
  for (int k = 0; k < 4; ++k) cams.push_back(orbit(1.5 * k, 0.3, 1.6, 24, 20));
  const auto views = render_views(truth, cams);
  TrainConfig cfg;
  cfg.iterations = 25;
  cfg.views_per_step = 2;
  cfg.rng_seed = 5;
  const TrainResult a = train_splats(views, init, cfg);
  const TrainResult b = train_splats(views, init, cfg);
  EXPECT_EQ(a.scene, b.scene);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  cfg.rng_seed = 6;
  EXPECT_NE(train_splats(views, init, cfg).loss_trace, a.loss_trace);
}

TEST(Train, NonFiniteLossAborts) {
  const SplatScene init({blob()});
  auto views = render_views(init, {orbit(0, 0.3, 1.5, 24, 20)});
  views[0].image.rgb[0] = std::numeric_limits<float>::quiet_NaN();
  TrainConfig cfg;
  cfg.iterations = 10;
  const TrainResult r = train_splats(views, init, cfg);
  EXPECT_TRUE(r.aborted);
  EXPECT_FALSE(r.diagnostic.empty());
  EXPECT_EQ(r.scene, init);
}

TEST(Train, OutputKeepsInvariants) {
  std::mt19937_64 rng(95);
  const SplatScene truth = testkit::random_scene(rng, 8, Vec3::Zero(), 0.3);
  const SplatScene init = testkit::random_scene(rng, 8, Vec3::Zero(), 0.3);
  std::vector<PinholeCamera> cams;
  for (int k = 0; k < 3; ++k) cams.push_back(orbit(2.0 * k, 0.2, 1.5, 24, 20));
  TrainConfig cfg;
  cfg.iterations = 30;
  const TrainResult r = train_splats(render_views(truth, cams), init, cfg);
  ASSERT_EQ(r.scene.size(), init.size());
  EXPECT_EQ(r.loss_trace.size(), 30u);
  for (const auto& g : r.scene.gaussians()) EXPECT_NO_THROW(validate(g));
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
}

TEST(SmoothTrace, TrailingMean) {
  const auto s = smooth_trace({4, 2, 6, 8}, 2);
  EXPECT_EQ(s, (std::vector<double>{4, 3, 4, 7}));
  EXPECT_TRUE(smooth_trace({}, 10).empty());
}
