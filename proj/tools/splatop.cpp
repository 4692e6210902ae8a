#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "splatop/app/config.hpp"
#include "splatop/app/runtime.hpp"
#include "splatop/app/scenario.hpp"
#include "splatop/core/splat_io.hpp"
#include "splatop/recon/capture_plan.hpp"
#include "splatop/recon/errors.hpp"
#include "splatop/recon/train.hpp"
#include "splatop/render/render.hpp"

using namespace splatop;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> split_numbers(const std::string& s, std::size_t n, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + s + "' is not a comma-separated list of numbers");
    }
  }
  if (out.size() != n) throw UsageError(flag + ": expected " + std::to_string(n) + " values");
  return out;
}

Vec3 vec3_flag(const std::string& s, const std::string& flag) {
  const auto v = split_numbers(s, 3, flag);
  return {v[0], v[1], v[2]};
}

std::string extension(const std::string& path) { return fs::path(path).extension().string(); }

bool scene_extension(const std::string& path) {
  const std::string e = extension(path);
  return e == ".splat" || e == ".ply";
}

char view_name_buf[64];
std::string view_name(std::size_t i, const char* ext) {
  std::snprintf(view_name_buf, sizeof view_name_buf, "view_%03zu%s", i, ext);
  return view_name_buf;
}

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

// --- serve ------------------------------------------------------------------

struct ServeArgs {
  std::string config, listen;
  std::optional<std::uint64_t> seed;
  std::optional<int> ws_port;
  bool lockstep = false, headless = false;
};

int run_serve(const ServeArgs& a) {
  AppConfig cfg = load_config(a.config);
  if (a.seed) {
    cfg.session.seed = *a.seed;
    cfg.session.reconstruction.train.rng_seed = *a.seed;
  }
  if (!a.listen.empty()) apply_listen_flag(cfg, a.listen);
  if (a.ws_port) cfg.ws_port = static_cast<std::uint16_t>(*a.ws_port);
  SessionServer server(cfg, load_world(cfg), a.lockstep ? ClockMode::Lockstep : ClockMode::RealTime);
  try {
    server.start();
  } catch (const ProtocolError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  std::printf("listening on %s:%u", cfg.host.c_str(), server.port());
  if (cfg.ws_port) std::printf(" (websocket %u)", server.ws_port());
  std::printf("\n");
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  for (const auto& d : server.diagnostics()) std::fprintf(stderr, "diagnostic: %s\n", d.c_str());
  std::fprintf(stderr, "shut down cleanly\n");
  return kOk;
}

// --- render -----------------------------------------------------------------

struct RenderArgs {
  std::string scene, camera, plan, out, background = "0,0,0";
  int workers = 0;
  bool depth = false;
};

int run_render(const RenderArgs& a) {
  if (!scene_extension(a.scene)) throw UsageError("--scene: unknown scene extension '" + extension(a.scene) + "'");
  const Vec3 bg = vec3_flag(a.background, "--background");
  const SplatScene scene = load_scene_file(a.scene);
  const PinholeCamera spec = load_camera_spec(a.camera);
  const RenderOptions opts{a.workers};

  if (!a.plan.empty()) {
    const CapturePlan plan = read_plan(a.plan);
    fs::create_directories(a.out);
    for (std::size_t i = 0; i < plan.poses.size(); ++i) {
      PinholeCamera cam = spec;
      cam.pose = plan.poses[i].inverse(Eigen::Isometry);
      write_ppm((fs::path(a.out) / view_name(i, ".ppm")).string(), render(scene, cam, bg, opts));
      write_depth((fs::path(a.out) / view_name(i, ".depth")).string(), render_depth(scene, cam, opts));
    }
    std::printf("rendered %zu views into %s\n", plan.poses.size(), a.out.c_str());
    return kOk;
  }
  if (extension(a.out) != ".ppm") throw UsageError("--out: unknown image extension '" + extension(a.out) + "'");
  write_ppm(a.out, render(scene, spec, bg, opts));
  if (a.depth) write_depth(fs::path(a.out).replace_extension(".depth").string(), render_depth(scene, spec, opts));
  return kOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string images, plan, camera, out, init, loss, background = "0,0,0";
  int iters = 500, stride = 4, views_per_step = 0;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a) {
  if (!scene_extension(a.out)) throw UsageError("--out: unknown scene extension '" + extension(a.out) + "'");
  if (a.iters < 0) throw UsageError("--iters must be >= 0");
  const CapturePlan plan = read_plan(a.plan);
  const PinholeCamera spec = load_camera_spec(a.camera);
  std::vector<PosedImage> views;
  bool all_depth = true;
  for (std::size_t i = 0; i < plan.poses.size(); ++i) {
    PosedImage v;
    v.cam = spec;
    v.cam.pose = plan.poses[i].inverse(Eigen::Isometry);
    v.image = read_ppm((fs::path(a.images) / view_name(i, ".ppm")).string());
    if (v.image.width != spec.width || v.image.height != spec.height)
      throw UsageError(view_name(i, ".ppm") + ": image size does not match the camera");
    const fs::path dpath = fs::path(a.images) / view_name(i, ".depth");
    if (fs::exists(dpath)) {
      v.depth = read_depth(dpath.string(), spec.width, spec.height);
    } else {
      all_depth = false;
    }
    views.push_back(std::move(v));
  }
  SplatScene init;
  if (!a.init.empty()) {
    init = load_scene_file(a.init);
  } else {
    if (!all_depth) throw UsageError("training without --init needs a .depth file for every view");
    SeedOptions so;
    so.stride = a.stride;
    init = seed_scene(views, so);
  }
  TrainConfig tc;
  tc.iterations = a.iters;
  tc.rng_seed = a.seed;
  tc.views_per_step = a.views_per_step;
  tc.background = vec3_flag(a.background, "--background");
  const TrainResult r = train_splats(views, init, tc);
  save_scene_file(r.scene, a.out);
  const std::string loss_path = a.loss.empty() ? a.out + ".loss.csv" : a.loss;
  std::ofstream csv(loss_path);
  if (!csv) throw std::runtime_error("cannot write " + loss_path);
  csv << "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < r.loss_trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, r.loss_trace[i]);
    csv << buf;
  }
  if (r.aborted) std::fprintf(stderr, "warning: %s\n", r.diagnostic.c_str());
  std::printf("trained %zu gaussians over %zu views; final loss %.6g\n", r.scene.size(), views.size(),
              r.loss_trace.empty() ? 0.0 : r.loss_trace.back());
  return kOk;
}

// --- convert / plan / scenario -----------------------------------------------

int run_convert(const std::string& in, const std::string& out) {
  if (!scene_extension(in)) throw UsageError("unknown input extension '" + extension(in) + "'");
  if (!scene_extension(out)) throw UsageError("unknown output extension '" + extension(out) + "'");
  save_scene_file(load_scene_file(in), out);
  return kOk;
}

int run_plan(const std::string& center, const std::vector<std::string>& rings, const std::string& out) {
  std::vector<Ring> rs;
  for (const auto& r : rings) {
    const auto v = split_numbers(r, 3, "--ring");
    if (v[2] != std::floor(v[2])) throw UsageError("--ring: count must be an integer");
    rs.push_back(Ring{v[0], v[1], static_cast<int>(v[2])});
  }
  if (rs.empty()) throw UsageError("at least one --ring is required");
  const CapturePlan plan = plan_capture(vec3_flag(center, "--center"), rs);
  if (out.empty() || out == "-") {
    std::fputs(serialize_plan(plan).c_str(), stdout);
  } else {
    write_plan(out, plan);
  }
  return kOk;
}

struct ScenarioArgs {
  std::string config, script, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
};

int run_scenario_cmd(const ScenarioArgs& a) {
  const AppConfig cfg = load_config(a.config);
  std::ifstream in(a.script);
  if (!in) throw UsageError("cannot open script " + a.script);
  std::stringstream ss;
  ss << in.rdbuf();
  ScenarioOptions opts;
  opts.seed = a.seed;
  opts.train_iterations = a.iters;
  const ScenarioResult r = run_scenario(cfg, ss.str(), opts);
  if (a.out.empty() || a.out == "-") {
    std::fputs(r.transcript.c_str(), stdout);
  } else {
    std::ofstream(a.out) << r.transcript;
  }
  if (r.exit_code != 0) std::fprintf(stderr, "assertion failed: %s\n", r.failure.c_str());
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"splatop: splat-based mobile manipulation simulator and tools"};
  app.require_subcommand(1);

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "run the simulator and protocol server");
  s->add_option("--config", serve.config, "config file")->required();
  s->add_option("--seed", serve.seed, "override the config seed");
  s->add_option("--listen", serve.listen, "host:port");
  s->add_option("--ws-port", serve.ws_port, "websocket bridge port");
  s->add_flag("--lockstep", serve.lockstep, "tick only on /session/clock");
  s->add_flag("--headless", serve.headless, "accepted for compatibility; the server has no UI");

  RenderArgs render_args;
  auto* r = app.add_subcommand("render", "render a scene file to PPM");
  r->add_option("--scene", render_args.scene, "scene file (.splat or .ply)")->required();
  r->add_option("--camera", render_args.camera, "camera spec JSON")->required();
  r->add_option("--plan", render_args.plan, "render every pose of a capture plan; --out is a directory");
  r->add_option("--out", render_args.out, "output .ppm (or directory with --plan)")->required();
  r->add_option("--background", render_args.background, "r,g,b");
  r->add_option("--workers", render_args.workers, "render threads (0 = default)");
  r->add_flag("--depth", render_args.depth, "also write a raw f32 .depth file");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "fit a scene to posed images");
  t->add_option("--images", train.images, "directory with view_NNN.ppm [+ .depth]")->required();
  t->add_option("--plan", train.plan, "capture plan giving the view poses")->required();
  t->add_option("--camera", train.camera, "camera spec JSON (intrinsics)")->required();
  t->add_option("--out", train.out, "output scene (.splat or .ply)")->required();
  t->add_option("--init", train.init, "initial scene instead of depth seeding");
  t->add_option("--iters", train.iters, "iterations");
  t->add_option("--seed", train.seed, "rng seed");
  t->add_option("--stride", train.stride, "depth seeding stride");
  t->add_option("--views-per-step", train.views_per_step, "views per step (0 = all)");
  t->add_option("--loss", train.loss, "loss CSV path (default <out>.loss.csv)");
  t->add_option("--background", train.background, "r,g,b");

  std::string conv_in, conv_out;
  auto* c = app.add_subcommand("convert", "convert between .splat and .ply");
  c->add_option("in", conv_in)->required();
  c->add_option("out", conv_out)->required();

  std::string plan_center = "0.6,0,0.45", plan_out;
  std::vector<std::string> plan_rings;
  auto* p = app.add_subcommand("plan", "emit a ring capture plan");
  p->add_option("--center", plan_center, "x,y,z");
  p->add_option("--ring", plan_rings, "radius,height,count (repeatable)");
  p->add_option("--out", plan_out, "output path (default stdout)");

  ScenarioArgs scen;
  auto* sc = app.add_subcommand("scenario", "run a scripted scenario against a fresh server");
  sc->add_option("--config", scen.config, "config file")->required();
  sc->add_option("--script", scen.script, "scenario script JSON")->required();
  sc->add_option("--seed", scen.seed, "override the config seed");
  sc->add_option("--iters", scen.iters, "override the training iteration budget");
  sc->add_option("--out", scen.out, "transcript path (default stdout)");
  sc->add_flag("--headless", "accepted for compatibility");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*s) return run_serve(serve);
    if (*r) return run_render(render_args);
    if (*t) return run_train(train);
    if (*c) return run_convert(conv_in, conv_out);
    if (*p) return run_plan(plan_center, plan_rings, plan_out);
    if (*sc) return run_scenario_cmd(scen);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
