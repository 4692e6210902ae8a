#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "splatop/core/splat_io.hpp"
#include "splatop/render/reference.hpp"
#include "splatop/render/render.hpp"
#include "test_support.hpp"

using namespace splatop;

namespace {

PinholeCamera axis_camera(int w = 64, int h = 64) {
  PinholeCamera cam;
  cam.fx = cam.fy = 100;
  cam.cx = (w - 1) / 2.0;
  cam.cy = (h - 1) / 2.0;
  cam.width = w;
  cam.height = h;
  return cam;
}

// Direct transcription of the compositing rule on top of project_gaussian,
// sharing nothing with the production prepare/sort path.
Image naive_composite(const SplatScene& scene, const PinholeCamera& cam, const Vec3& bg) {
  struct P {
    Splat2D s;
    Mat2 inv;
    std::size_t index;
  };
  std::vector<P> ps;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    auto s = project_gaussian(scene[i], cam);
    if (!s || s->cov2d.determinant() < 1e-12) continue;
    ps.push_back({*s, s->cov2d.inverse(), i});
  }
  std::stable_sort(ps.begin(), ps.end(), [](const P& a, const P& b) { return a.s.depth < b.s.depth; });
  Image img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      Vec3 c = Vec3::Zero();
      double T = 1.0;
      for (const P& p : ps) {
        const Vec2 d = Vec2(x, y) - p.s.mean2d;
        const double a = std::min(p.s.opacity * std::exp(-0.5 * d.dot(p.inv * d)), 0.99);
        if (a < 1.0 / 255.0) continue;
        c += p.s.color * a * T;
        T *= 1 - a;
        if (T < 1e-4) break;
      }
      c += bg * T;
      for (int k = 0; k < 3; ++k) img.pixel(x, y)[k] = static_cast<float>(std::clamp(c[k], 0.0, 1.0));
    }
  }
  return img;
}

float max_abs_diff(const Image& a, const Image& b) {
  float m = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) m = std::max(m, std::abs(a.rgb[i] - b.rgb[i]));
  return m;
}

}  // namespace

TEST(Render, EmptySceneIsBackground) {
  const Image img = render(SplatScene(), axis_camera(), Vec3::Zero());
  EXPECT_TRUE(std::all_of(img.rgb.begin(), img.rgb.end(), [](float v) { return v == 0.0f; }));
  const Image gray = render(SplatScene(), axis_camera(), Vec3(0.25, 0.5, 0.75));
  EXPECT_EQ(gray.pixel(10, 20)[0], 0.25f);
  EXPECT_EQ(gray.pixel(10, 20)[1], 0.5f);
  EXPECT_EQ(gray.pixel(10, 20)[2], 0.75f);
}

TEST(Render, OpaqueCenteredGaussianSaturates) {
  Gaussian3D g;
  g.mean = Vec3(0, 0, 2);
  g.scale = Vec3::Constant(1.0);
  g.opacity = 1.0;
  g.color = Vec3(1, 0, 0);
  PinholeCamera cam = axis_camera(65, 65);
  const Image img = render(SplatScene({g}), cam, Vec3::Zero());
  EXPECT_GE(img.pixel(32, 32)[0], 0.98f);
  EXPECT_FLOAT_EQ(img.pixel(32, 32)[0], 0.99f);
}

TEST(Render, TiledEqualsReferenceBitwise) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 12; ++trial) {
    const SplatScene s = testkit::random_scene(rng, 1 + static_cast<int>(rng() % 100));
    const PinholeCamera cam = testkit::random_orbit_camera(rng, 96, 80, 3.0, 80);
    const Vec3 bg(0.1, 0.2, 0.3);
    EXPECT_TRUE(testkit::bits_equal(render(s, cam, bg).rgb, render_reference(s, cam, bg).rgb)) << trial;
  }
}

TEST(Render, ReferenceAgreesWithNaiveComposite) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 6; ++trial) {
    const SplatScene s = testkit::random_scene(rng, 30);
    const PinholeCamera cam = testkit::random_orbit_camera(rng, 48, 48, 3.0, 50);
    const Image a = render_reference(s, cam, Vec3::Zero());
    const Image b = naive_composite(s, cam, Vec3::Zero());
    // Conic evaluation order differs, so the alpha floor can flip on a few
    // borderline pixels; everywhere else the values agree to float precision.
    std::size_t off = 0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) off += std::abs(a.rgb[i] - b.rgb[i]) > 1e-5f;
    EXPECT_LE(off, a.rgb.size() / 500) << trial;
    EXPECT_LT(max_abs_diff(a, b), 2.0f / 255.0f);
  }
}

TEST(Render, WorkerCountDoesNotChangeOutput) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 4; ++trial) {
    const SplatScene s = testkit::random_scene(rng, 80);
    const PinholeCamera cam = testkit::random_orbit_camera(rng, 128, 128, 3.0, 100);
    const Image one = render(s, cam, Vec3::Zero(), {.workers = 1});
    for (int w : {2, 3, 8})
      EXPECT_TRUE(testkit::bits_equal(one.rgb, render(s, cam, Vec3::Zero(), {.workers = w}).rgb));
    EXPECT_EQ(render_depth(s, cam, {.workers = 1}), render_depth(s, cam, {.workers = 5}));
  }
}

TEST(Render, TransparentGaussianChangesNothing) {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    SplatScene s = testkit::random_scene(rng, 25);
    const PinholeCamera cam = testkit::random_orbit_camera(rng, 64, 64, 3.0, 60);
    auto gs = s.gaussians();
    Gaussian3D ghost = testkit::random_gaussian(rng);
    ghost.opacity = 0.0;
    gs.insert(gs.begin() + static_cast<long>(rng() % (gs.size() + 1)), ghost);
    EXPECT_TRUE(testkit::bits_equal(render(s, cam, Vec3(0.3, 0.3, 0.3)).rgb,
                                    render(SplatScene(gs), cam, Vec3(0.3, 0.3, 0.3)).rgb));
  }
}

TEST(Render, ChannelsStayInUnitInterval) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const SplatScene s = testkit::random_scene(rng, 100);
    const PinholeCamera cam = testkit::random_orbit_camera(rng, 64, 64, 2.0, 60);
    const Image img = render(s, cam, Vec3(1, 1, 1));
    for (float v : img.rgb) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(Render, EqualDepthTiesFollowSceneOrder) {
  Gaussian3D red;
  red.mean = Vec3(0, 0, 2);
  red.scale = Vec3::Constant(0.5);
  red.opacity = 0.9;
  red.color = Vec3(1, 0, 0);
  Gaussian3D green = red;
  green.color = Vec3(0, 1, 0);
  const PinholeCamera cam = axis_camera(33, 33);
  const Image rg = render(SplatScene({red, green}), cam, Vec3::Zero());
  const Image gr = render(SplatScene({green, red}), cam, Vec3::Zero());
  EXPECT_GT(rg.pixel(16, 16)[0], rg.pixel(16, 16)[1]);
  EXPECT_GT(gr.pixel(16, 16)[1], gr.pixel(16, 16)[0]);
}

TEST(Render, NearerGaussianOccludes) {
  Gaussian3D front;
  front.mean = Vec3(0, 0, 1.5);
  front.scale = Vec3::Constant(0.5);
  front.opacity = 1.0;
  front.color = Vec3(0, 0, 1);
  Gaussian3D back = front;
  back.mean.z() = 3.0;
  back.color = Vec3(1, 1, 0);
  const PinholeCamera cam = axis_camera(33, 33);
  // Scene order puts the far one first; depth order must win.
  const Image img = render(SplatScene({back, front}), cam, Vec3::Zero());
  EXPECT_GT(img.pixel(16, 16)[2], 0.98f);
  EXPECT_LT(img.pixel(16, 16)[0], 0.02f);
}

TEST(Render, CulledGaussiansAreCounted) {
  Gaussian3D behind;
  behind.mean = Vec3(0, 0, -1);
  Gaussian3D front;
  front.mean = Vec3(0, 0, 3);
  RenderStats stats;
  render(SplatScene({behind, front, behind}), axis_camera(), Vec3::Zero(), {}, &stats);
  EXPECT_EQ(stats.culled, 2u);
  EXPECT_EQ(stats.projected, 1u);
  EXPECT_EQ(stats.singular, 0u);
}

TEST(Render, FootprintBoxesAreConservative) {
  std::mt19937_64 rng(56);
  for (int trial = 0; trial < 6; ++trial) {
    const SplatScene s = testkit::random_scene(rng, 40);
    const PinholeCamera cam = testkit::random_orbit_camera(rng, 80, 64, 3.0, 70);
    for (const PreparedSplat& p : prepare_splats(s, cam)) {
      for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
          const bool inside = x >= p.x0 && x < p.x1 && y >= p.y0 && y < p.y1;
          if (!inside) {
            ASSERT_LT(splat_alpha(p, x, y), kAlphaMin) << "splat " << p.index;
          }
        }
    }
  }
}

TEST(Render, BinsListEachSplatInDepthOrder) {
  std::mt19937_64 rng(57);
  const SplatScene s = testkit::random_scene(rng, 60);
  const PinholeCamera cam = testkit::random_orbit_camera(rng, 100, 70, 3.0, 80);
  const auto splats = prepare_splats(s, cam);
  for (std::size_t i = 1; i < splats.size(); ++i)
    EXPECT_TRUE(splats[i - 1].depth < splats[i].depth ||
                (splats[i - 1].depth == splats[i].depth && splats[i - 1].index < splats[i].index));
  const TileBins bins = bin_splats(splats, cam.width, cam.height);
  EXPECT_EQ(bins.tiles_x, 7);
  EXPECT_EQ(bins.tiles_y, 5);
  for (const auto& list : bins.lists) EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
}

TEST(RenderDepth, EmptySceneIsInfinite) {
  const DepthImage d = render_depth(SplatScene(), axis_camera());
  EXPECT_TRUE(std::all_of(d.depth.begin(), d.depth.end(), [](float v) { return v == kDepthInfinity; }));
}

TEST(RenderDepth, OpaqueOnAxisGaussian) {
  Gaussian3D g;
  g.mean = Vec3(0, 0, 5);
  g.scale = Vec3::Constant(0.5);
  g.opacity = 1.0;
  const PinholeCamera cam = axis_camera(65, 65);
  const DepthImage d = render_depth(SplatScene({g}), cam);
  EXPECT_NEAR(d.at(32, 32), 5.0, 1e-6);
  EXPECT_EQ(d.at(0, 0), kDepthInfinity);
}

TEST(RenderDepth, MatchesReference) {
  std::mt19937_64 rng(58);
  for (int trial = 0; trial < 8; ++trial) {
    const SplatScene s = testkit::random_scene(rng, 60);
    const PinholeCamera cam = testkit::random_orbit_camera(rng, 64, 48, 3.0, 60);
    EXPECT_EQ(render_depth(s, cam), render_depth_reference(s, cam));
  }
}

TEST(Render, GoldenThreeGaussianImage) {
  const SplatScene s = load_scene_file(testkit::data_path("fixtures/three_gaussians.splat"));
  PinholeCamera cam;
  cam.fx = cam.fy = 100;
  cam.cx = 63.5;
  cam.cy = 47.5;
  cam.width = 128;
  cam.height = 96;
  cam.pose = look_at_pose(Vec3(0, -2.5, 0.8), Vec3::Zero());
  const Bytes golden = read_file_bytes(testkit::data_path("fixtures/three_gaussians.ppm"));
  EXPECT_EQ(encode_ppm(render(s, cam, Vec3::Zero())), golden);
  EXPECT_EQ(encode_ppm(render_reference(s, cam, Vec3::Zero())), golden);
}

TEST(Image, PpmRoundTripAndPsnr) {
  std::mt19937_64 rng(59);
  Image img(7, 5);
  for (auto& v : img.rgb) v = static_cast<float>(rng() % 256) / 255.0f;
  const Image back = decode_ppm(encode_ppm(img));
  EXPECT_EQ(back, img);
  EXPECT_TRUE(std::isinf(psnr(img, back)));
  Image off = img;
  for (auto& v : off.rgb) v = std::clamp(v + 0.1f, 0.0f, 1.0f);
  EXPECT_GT(psnr(img, off), 10.0);
  EXPECT_LT(psnr(img, off), 30.0);
  EXPECT_THROW(decode_ppm({'P', '3', '\n'}), std::exception);
}

TEST(Image, Rgb8Quantization) {
  Image img(2, 1);
  img.rgb = {0.0f, 1.0f, 0.5f, 0.2f, 1.5f, -0.3f};
  const Rgb8Image q = to_rgb8(img);
  EXPECT_EQ(q.pixels, (std::vector<std::uint8_t>{0, 255, 128, 51, 255, 0}));
}
