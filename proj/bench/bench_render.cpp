// Tiled OpenMP compositor vs the serial brute-force reference.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "splatop/render/reference.hpp"
#include "splatop/render/render.hpp"

using namespace splatop;

namespace {

SplatScene scene_of(int n) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> pos(0, 0.5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Gaussian3D> gs;
  for (int i = 0; i < n; ++i) {
    Gaussian3D g;
    g.mean = Vec3(pos(rng), pos(rng), pos(rng));
    g.scale = Vec3(0.01 + 0.05 * u(rng), 0.01 + 0.05 * u(rng), 0.01 + 0.05 * u(rng));
    g.rotation = Quat(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5).normalized();
    g.opacity = 0.2 + 0.7 * u(rng);
    g.color = Vec3(u(rng), u(rng), u(rng));
    gs.push_back(g);
  }
  return SplatScene(gs);
}

PinholeCamera camera() {
  PinholeCamera c;
  c.fx = c.fy = 200;
  c.width = 256;
  c.height = 192;
  c.cx = 127.5;
  c.cy = 95.5;
  c.pose = look_at_pose(Vec3(0, -3, 1), Vec3::Zero());
  return c;
}

void BM_Tiled(benchmark::State& state) {
  const SplatScene scene = scene_of(static_cast<int>(state.range(0)));
  const PinholeCamera cam = camera();
  const RenderOptions opts{static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(render(scene, cam, Vec3::Zero(), opts));
  state.SetLabel("workers=" + std::to_string(opts.workers ? opts.workers : omp_get_max_threads()));
}

void BM_Reference(benchmark::State& state) {
  const SplatScene scene = scene_of(static_cast<int>(state.range(0)));
  const PinholeCamera cam = camera();
  for (auto _ : state) benchmark::DoNotOptimize(render_reference(scene, cam, Vec3::Zero()));
}

}  // namespace

BENCHMARK(BM_Tiled)->ArgsProduct({{1000, 10000}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reference)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
