// Regenerates the bundled world scene and the frozen golden fixtures.
// Usage: make_fixtures <data-dir>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "splatop/core/splat_io.hpp"
#include "splatop/render/reference.hpp"
#include "splatop/render/render.hpp"

using namespace splatop;

namespace {

Gaussian3D disc(const Vec3& mean, const Vec3& scale, const Vec3& color, double opacity,
                const Quat& rot = Quat::Identity()) {
  Gaussian3D g;
  g.mean = mean;
  g.scale = scale;
  g.rotation = rot;
  g.opacity = opacity;
  g.color = color;
  return g;
}

// World frame: the robot starts at the origin facing +x. A table stands at
// x 1.40-1.90 with its top at z 0.40; a red button sits on it at (1.6, 0),
// behind a blue board at x 1.45 that hides it from the base camera once the
// robot is parked at x 1.0.
SplatScene lab_world() {
  std::vector<Gaussian3D> gs;
  // Floor only ahead of the parking spot: floor splats lying near a camera's
  // image plane would project to frame-filling ellipses.
  for (int i = 0; i <= 18; ++i) {
    for (int j = 0; j <= 30; ++j) {
      const double x = 1.15 + 0.1 * i, y = -1.5 + 0.1 * j;
      const double shade = ((i + j) % 2 == 0) ? 0.55 : 0.40;
      gs.push_back(disc({x, y, 0.0}, {0.06, 0.06, 0.004}, {shade, shade, shade * 0.95}, 0.9));
    }
  }
  for (int i = 0; i <= 12; ++i) {
    for (int j = 0; j <= 17; ++j) {
      const double x = 1.40 + 0.04 * i + 0.01, y = -0.35 + 0.04 * j + 0.01;
      gs.push_back(disc({x, y, 0.40}, {0.028, 0.028, 0.006}, {0.55, 0.38, 0.22}, 0.95));
    }
  }
  for (double lx : {1.43, 1.87})
    for (double ly : {-0.32, 0.32})
      for (int k = 0; k < 5; ++k)
        gs.push_back(disc({lx, ly, 0.04 + 0.08 * k}, {0.02, 0.02, 0.05}, {0.35, 0.25, 0.15}, 0.95));
  gs.push_back(disc({1.6, 0.0, 0.41}, {0.035, 0.035, 0.008}, {0.2, 0.2, 0.2}, 0.95));
  gs.push_back(disc({1.6, 0.0, 0.425}, {0.02, 0.02, 0.01}, {0.9, 0.1, 0.1}, 0.95));
  for (int j = 0; j <= 16; ++j) {
    for (int k = 0; k <= 7; ++k) {
      const double y = -0.24 + 0.03 * j, z = 0.41 + 0.03 * k;
      gs.push_back(disc({1.45, y, z}, {0.004, 0.022, 0.022}, {0.15, 0.3, 0.75}, 0.97));
    }
  }
  for (int j = 0; j <= 30; ++j) {
    for (int k = 0; k <= 10; ++k) {
      const double y = -1.5 + 0.1 * j, z = 0.05 + 0.1 * k;
      const double tint = 0.6 + 0.2 * ((j / 3) % 2);
      gs.push_back(disc({2.6, y, z}, {0.004, 0.065, 0.065}, {tint, tint, 0.7}, 0.9));
    }
  }
  return SplatScene(std::move(gs), "world");
}

SplatScene three_gaussians() {
  return SplatScene({
      disc({0.0, 0.0, 0.0}, {0.3, 0.2, 0.1}, {0.9, 0.2, 0.1}, 0.8),
      disc({0.4, 0.1, 0.5}, {0.15, 0.15, 0.15}, {0.1, 0.8, 0.3}, 0.6, Quat(0.9238795, 0.0, 0.3826834, 0.0).normalized()),
      disc({-0.3, -0.2, -0.4}, {0.25, 0.1, 0.2}, {0.2, 0.3, 0.9}, 0.9, Quat(0.8, 0.2, -0.3, 0.4).normalized()),
  });
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixtures <data-dir>\n");
    return 2;
  }
  namespace fs = std::filesystem;
  const fs::path data = argv[1];
  fs::create_directories(data / "fixtures");
  fs::create_directories(data / "worlds");

  write_file_bytes((data / "worlds" / "lab.splat").string(), encode_splat_binary(lab_world()));

  const SplatScene tri = three_gaussians();
  write_file_bytes((data / "fixtures" / "three_gaussians.splat").string(), encode_splat_binary(tri));
  write_file_bytes((data / "fixtures" / "three_gaussians.ply").string(), save_ply(tri));

  const nlohmann::json cam_json = {{"fx", 100.0}, {"fy", 100.0},           {"cx", 63.5},
                                   {"cy", 47.5},  {"width", 128},          {"height", 96},
                                   {"eye", {0.0, -2.5, 0.8}}, {"target", {0.0, 0.0, 0.0}}};
  std::ofstream(data / "fixtures" / "three_gaussians_cam.json") << cam_json.dump(2) << "\n";
  PinholeCamera cam{100.0, 100.0, 63.5, 47.5, 128, 96, look_at_pose({0.0, -2.5, 0.8}, Vec3::Zero())};

  // Frozen from the brute-force compositor over the scene as stored on disk.
  const SplatScene stored = load_splat_binary(encode_splat_binary(tri));
  write_ppm((data / "fixtures" / "three_gaussians.ppm").string(), render_reference(stored, cam, Vec3::Zero()));
  std::printf("wrote fixtures under %s\n", data.string().c_str());
  return 0;
}
