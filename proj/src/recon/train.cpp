#include "splatop/recon/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "splatop/render/render.hpp"

namespace splatop {

double& GaussianParams::operator[](int i) {
  if (i < 3) return mean[i];
  if (i < 6) return log_scale[i - 3];
  if (i < 10) return rotation[i - 6];
  if (i == 10) return opacity_logit;
  return color[i - 11];
}

double GaussianParams::operator[](int i) const { return const_cast<GaussianParams&>(*this)[i]; }

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Quat normalized_quat(const Eigen::Vector4d& r) {
  const Eigen::Vector4d n = r / r.norm();
  return Quat(n[0], n[1], n[2], n[3]);
}

// dL/dq for R(q) with q = (w, x, y, z) unit, given dL/dR.
Eigen::Vector4d rotation_grad(const Quat& q, const Mat3& G) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  Eigen::Vector4d g;
  g[0] = 2.0 * (-z * G(0, 1) + y * G(0, 2) + z * G(1, 0) - x * G(1, 2) - y * G(2, 0) + x * G(2, 1));
  g[1] = 2.0 * (y * G(0, 1) + z * G(0, 2) + y * G(1, 0) - 2.0 * x * G(1, 1) - w * G(1, 2) + z * G(2, 0) +
                w * G(2, 1) - 2.0 * x * G(2, 2));
  g[2] = 2.0 * (-2.0 * y * G(0, 0) + x * G(0, 1) + w * G(0, 2) + x * G(1, 0) + z * G(1, 2) - w * G(2, 0) +
                z * G(2, 1) - 2.0 * y * G(2, 2));
  g[3] = 2.0 * (-2.0 * z * G(0, 0) - w * G(0, 1) + x * G(0, 2) + w * G(1, 0) - 2.0 * z * G(1, 1) + y * G(1, 2) +
                x * G(2, 0) + y * G(2, 1));
  return g;
}

struct SplatGrad {
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  Vec2 mean2d = Vec2::Zero();
  double q00 = 0.0, q01 = 0.0, q11 = 0.0;  // full symmetric matrix entries
  bool touched = false;
};

struct Contribution {
  std::uint32_t k;
  double alpha;
  double T;
};

GaussianParams zero_params() {
  GaussianParams z;
  z.rotation.setZero();
  return z;
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
}

void backprop_gaussian(const GaussianParams& p, const PreparedSplat& s, const SplatGrad& sg, const PinholeCamera& cam,
                       GaussianParams& out) {
  const Gaussian3D g = to_gaussian(p);
  const Mat3 W = cam.pose.linear();
  const Vec3 t = cam.pose * g.mean;
  const JacobianPoint jp = jacobian_point(t, cam);
  const Jacobian23 J = projection_jacobian(jp.t, cam.fx, cam.fy);
  const Jacobian23 Tm = J * W;
  const Mat3 R = g.rotation.toRotationMatrix();
  const Mat3 M = R * g.scale.asDiagonal();
  const Mat3 sigma = M * M.transpose();

  Mat2 Q;
  Q << s.conic_a, s.conic_b, s.conic_b, s.conic_c;
  Mat2 GQ;
  GQ << sg.q00, sg.q01, sg.q01, sg.q11;
  const Mat2 G2 = -Q * GQ * Q;

  const Jacobian23 G_T = 2.0 * G2 * Tm * sigma;
  const Mat3 G_sigma = Tm.transpose() * G2 * Tm;
  const Jacobian23 G_J = G_T * W.transpose();

  // J(0,2) = -fx * rx / z with rx = x / z, or a constant when clamped.
  const double tx = t.x(), ty = t.y(), tz = t.z();
  const double iz = 1.0 / tz, iz2 = iz * iz;
  const double fx = cam.fx, fy = cam.fy;
  const double rx = jp.t.x() * iz, ry = jp.t.y() * iz;
  Vec3 G_t;
  G_t.x() = (jp.clamped_x ? 0.0 : G_J(0, 2) * (-fx * iz2)) + sg.mean2d.x() * fx * iz;
  G_t.y() = (jp.clamped_y ? 0.0 : G_J(1, 2) * (-fy * iz2)) + sg.mean2d.y() * fy * iz;
  G_t.z() = G_J(0, 0) * (-fx * iz2) + G_J(0, 2) * ((jp.clamped_x ? 1.0 : 2.0) * fx * rx * iz2) +
            G_J(1, 1) * (-fy * iz2) + G_J(1, 2) * ((jp.clamped_y ? 1.0 : 2.0) * fy * ry * iz2) -
            sg.mean2d.x() * fx * tx * iz2 - sg.mean2d.y() * fy * ty * iz2;
  out.mean += W.transpose() * G_t;

  const Mat3 G_M = 2.0 * G_sigma * M;
  const Mat3 RtGM = R.transpose() * G_M;
  Mat3 G_R = G_M;
  for (int k = 0; k < 3; ++k) {
    G_R.col(k) *= g.scale[k];
    out.log_scale[k] += RtGM(k, k) * g.scale[k];
  }
  const Eigen::Vector4d gq = rotation_grad(g.rotation, G_R);
  const Eigen::Vector4d qn(g.rotation.w(), g.rotation.x(), g.rotation.y(), g.rotation.z());
  out.rotation += (gq - qn * qn.dot(gq)) / p.rotation.norm();

  out.opacity_logit += sg.opacity * g.opacity * (1.0 - g.opacity);
  out.color += sg.color;
}

}  // namespace

std::vector<GaussianParams> to_params(const SplatScene& scene) {
  std::vector<GaussianParams> out;
  out.reserve(scene.size());
  for (const auto& g : scene.gaussians()) {
    GaussianParams p;
    p.mean = g.mean;
    p.log_scale = g.scale.array().log();
    p.rotation = Eigen::Vector4d(g.rotation.w(), g.rotation.x(), g.rotation.y(), g.rotation.z());
    const double o = std::clamp(g.opacity, 1e-6, 1.0 - 1e-6);
    p.opacity_logit = std::log(o / (1.0 - o));
    p.color = g.color;
    out.push_back(p);
  }
  return out;
}

Gaussian3D to_gaussian(const GaussianParams& p) {
  Gaussian3D g;
  g.mean = p.mean;
  g.scale = p.log_scale.array().exp();
  g.rotation = normalized_quat(p.rotation);
  g.opacity = sigmoid(p.opacity_logit);
  g.color = p.color;
  return g;
}

SplatScene to_scene(const std::vector<GaussianParams>& params, const std::string& frame_id) {
  std::vector<Gaussian3D> gs;
  gs.reserve(params.size());
  for (const auto& p : params) gs.push_back(to_gaussian(p));
  return SplatScene(std::move(gs), frame_id);
}

ViewEvaluation evaluate_view(const std::vector<GaussianParams>& params, const PosedImage& view,
                             const Vec3& background, std::vector<GaussianParams>* grad) {
  const PinholeCamera& cam = view.cam;
  if (view.image.width != cam.width || view.image.height != cam.height)
    throw std::invalid_argument("evaluate_view: image and camera sizes differ");
  const SplatScene scene = to_scene(params, "train");
  const auto splats = prepare_splats(scene, cam);
  const auto bins = bin_splats(splats, cam.width, cam.height);

  ViewEvaluation ev;
  ev.rendered = Image(cam.width, cam.height);
  ev.support_signature = kFnvOffset;
  std::vector<SplatGrad> sgrad(grad ? splats.size() : 0);
  std::vector<Contribution> contrib;
  const double norm = 2.0 / (3.0 * cam.width * cam.height);
  double sq_err = 0.0;

  for (int tile = 0; tile < bins.tiles_x * bins.tiles_y; ++tile) {
    const auto& list = bins.lists[tile];
    const int px0 = (tile % bins.tiles_x) * kTileSize, py0 = (tile / bins.tiles_x) * kTileSize;
    const int px1 = std::min(px0 + kTileSize, cam.width), py1 = std::min(py0 + kTileSize, cam.height);
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        contrib.clear();
        double T = 1.0;
        double r = 0.0, g = 0.0, b = 0.0;
        for (const std::uint32_t k : list) {
          const PreparedSplat& s = splats[k];
          const double alpha = splat_alpha(s, x, y);
          if (alpha < kAlphaMin) continue;
          contrib.push_back({k, alpha, T});
          const double w = alpha * T;
          r += s.color.x() * w;
          g += s.color.y() * w;
          b += s.color.z() * w;
          T *= 1.0 - alpha;
          if (T < kTransmittanceMin) break;
        }
        const Vec3 C(r + background.x() * T, g + background.y() * T, b + background.z() * T);
        float* out = ev.rendered.pixel(x, y);
        for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(std::clamp(C[c], 0.0, 1.0));
        const float* target = view.image.pixel(x, y);
        const Vec3 res(C.x() - target[0], C.y() - target[1], C.z() - target[2]);
        sq_err += res.squaredNorm();

        const std::uint64_t pixel_id = static_cast<std::uint64_t>(y) * cam.width + x;
        for (const auto& c : contrib) fnv_mix(ev.support_signature, (pixel_id << 32) ^ splats[c.k].index);

        if (!grad) continue;
        const Vec3 dLdC = norm * res;
        Vec3 behind = background;
        for (auto it = contrib.rbegin(); it != contrib.rend(); ++it) {
          const PreparedSplat& s = splats[it->k];
          SplatGrad& sg = sgrad[it->k];
          sg.touched = true;
          sg.color += dLdC * (it->alpha * it->T);
          const double dLdalpha = it->T * dLdC.dot(s.color - behind);
          behind = s.color * it->alpha + (1.0 - it->alpha) * behind;
          const double falloff = std::exp(splat_power(s, x, y));
          if (!(s.opacity * falloff < kAlphaMax)) continue;  // clamped: stop-gradient
          sg.opacity += dLdalpha * falloff;
          const double dLdpower = dLdalpha * it->alpha;
          const double dx = x - s.mean.x(), dy = y - s.mean.y();
          sg.mean2d.x() += dLdpower * (s.conic_a * dx + s.conic_b * dy);
          sg.mean2d.y() += dLdpower * (s.conic_b * dx + s.conic_c * dy);
          sg.q00 += dLdpower * (-0.5 * dx * dx);
          sg.q01 += dLdpower * (-0.5 * dx * dy);
          sg.q11 += dLdpower * (-0.5 * dy * dy);
        }
      }
    }
  }
  ev.loss = sq_err / (3.0 * cam.width * cam.height);

  if (grad) {
    if (grad->size() != params.size()) grad->assign(params.size(), zero_params());
    for (std::size_t k = 0; k < splats.size(); ++k) {
      if (!sgrad[k].touched) continue;
      const std::uint32_t i = splats[k].index;
      backprop_gaussian(params[i], splats[k], sgrad[k], cam, (*grad)[i]);
    }
  }
  return ev;
}

double evaluate_views(const std::vector<GaussianParams>& params, const std::vector<PosedImage>& views,
                      const Vec3& background, std::vector<GaussianParams>* grad) {
  const int n = static_cast<int>(views.size());
  std::vector<double> losses(n, 0.0);
  std::vector<std::vector<GaussianParams>> grads(grad ? n : 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (int v = 0; v < n; ++v) {
    std::vector<GaussianParams>* g = nullptr;
    if (grad) {
      grads[v].assign(params.size(), zero_params());
      g = &grads[v];
    }
    losses[v] = evaluate_view(params, views[v], background, g).loss;
  }
  double total = 0.0;
  for (int v = 0; v < n; ++v) total += losses[v];
  if (grad) {
    grad->assign(params.size(), zero_params());
    for (int v = 0; v < n; ++v)
      for (std::size_t i = 0; i < params.size(); ++i)
        for (int k = 0; k < GaussianParams::kCount; ++k) (*grad)[i][k] += grads[v][i][k];
  }
  return total;
}

TrainResult train_splats(const std::vector<PosedImage>& targets, const SplatScene& init, const TrainConfig& cfg) {
  if (init.empty()) throw std::invalid_argument("train_splats: initial scene is empty");
  if (targets.empty()) throw std::invalid_argument("train_splats: no target views");
  if (cfg.iterations < 0) throw std::invalid_argument("train_splats: negative iteration count");

  TrainResult result{init, {}, false, {}};
  if (cfg.iterations == 0) return result;

  std::vector<GaussianParams> params = to_params(init);
  std::vector<GaussianParams> m(params.size(), zero_params()), v(params.size(), zero_params());
  std::vector<GaussianParams> grad;
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<int> order(targets.size());
  std::iota(order.begin(), order.end(), 0);
  const double group_lr[5] = {cfg.lr.mean, cfg.lr.log_scale, cfg.lr.rotation, cfg.lr.opacity_logit, cfg.lr.color};
  auto group_of = [](int k) { return k < 3 ? 0 : k < 6 ? 1 : k < 10 ? 2 : k == 10 ? 3 : 4; };
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  std::vector<PosedImage> batch_storage;
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::vector<PosedImage>* batch = &targets;
    if (cfg.views_per_step > 0 && cfg.views_per_step < static_cast<int>(targets.size())) {
      std::shuffle(order.begin(), order.end(), rng);
      batch_storage.clear();
      for (int i = 0; i < cfg.views_per_step; ++i) batch_storage.push_back(targets[order[i]]);
      batch = &batch_storage;
    }
    const double loss = evaluate_views(params, *batch, cfg.background, &grad);
    if (!std::isfinite(loss)) {
      result.aborted = true;
      result.diagnostic = "non-finite loss at iteration " + std::to_string(it) + "; returning last finite iterate";
      break;
    }
    result.loss_trace.push_back(loss);

    const double progress = cfg.iterations > 1 ? static_cast<double>(it) / (cfg.iterations - 1) : 0.0;
    const double decay = std::pow(cfg.lr_final_factor, progress);
    const double bc1 = 1.0 - std::pow(beta1, it + 1), bc2 = 1.0 - std::pow(beta2, it + 1);
    std::vector<GaussianParams> next = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (int k = 0; k < GaussianParams::kCount; ++k) {
        const double g = grad[i][k];
        m[i][k] = beta1 * m[i][k] + (1.0 - beta1) * g;
        v[i][k] = beta2 * v[i][k] + (1.0 - beta2) * g * g;
        const double step = group_lr[group_of(k)] * decay * (m[i][k] / bc1) / (std::sqrt(v[i][k] / bc2) + eps);
        next[i][k] -= step;
      }
      auto& p = next[i];
      const double n = p.rotation.norm();
      if (n > 0.0 && std::isfinite(n)) p.rotation /= n;
      p.color = p.color.cwiseMax(0.0).cwiseMin(1.0);
    }
    params = std::move(next);
    result.scene = to_scene(params, init.frame_id());
  }
  return result;
}

std::vector<double> smooth_trace(const std::vector<double>& trace, int window) {
  std::vector<double> out(trace.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    acc += trace[i];
    if (i >= static_cast<std::size_t>(window)) acc -= trace[i - window];
    out[i] = acc / static_cast<double>(std::min<std::size_t>(i + 1, window));
  }
  return out;
}

}  // namespace splatop
