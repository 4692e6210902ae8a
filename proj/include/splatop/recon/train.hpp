#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatop/core/gaussian.hpp"
#include "splatop/recon/geometry_init.hpp"

namespace splatop {

/// Unconstrained training parameterization of one Gaussian.
struct GaussianParams {
  Vec3 mean = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Eigen::Vector4d rotation{1.0, 0.0, 0.0, 0.0};  // w, x, y, z; normalized in the forward pass
  double opacity_logit = 0.0;
  Vec3 color = Vec3::Zero();

  static constexpr int kCount = 14;
  double& operator[](int i);
  double operator[](int i) const;
};

std::vector<GaussianParams> to_params(const SplatScene& scene);
Gaussian3D to_gaussian(const GaussianParams& p);
SplatScene to_scene(const std::vector<GaussianParams>& params, const std::string& frame_id);

struct ViewEvaluation {
  double loss = 0.0;                     // mean squared error over pixels and channels
  std::uint64_t support_signature = 0;   // hash of contributing (pixel, gaussian) pairs
  Image rendered;                        // forward composite cast to f32
};

/// Forward pass matching `render` exactly, photometric MSE against the view,
/// and (when `grad` is non-null) analytic gradients accumulated into `grad`.
/// The alpha floor, alpha clamp and transmittance early-out are treated as
/// stop-gradients.
ViewEvaluation evaluate_view(const std::vector<GaussianParams>& params, const PosedImage& view,
                             const Vec3& background, std::vector<GaussianParams>* grad);

/// Sum over views of per-view MSE; gradients reduced in view order.
double evaluate_views(const std::vector<GaussianParams>& params, const std::vector<PosedImage>& views,
                      const Vec3& background, std::vector<GaussianParams>* grad);

struct LearningRates {
  double mean = 2e-3;
  double log_scale = 1e-2;
  double rotation = 1e-2;
  double opacity_logit = 5e-2;
  double color = 2e-2;
};

struct TrainConfig {
  int iterations = 500;
  LearningRates lr;
  /// All learning rates decay exponentially to lr * lr_final_factor.
  double lr_final_factor = 0.1;
  std::uint64_t rng_seed = 0;
  /// Views per step, drawn from rng_seed; 0 uses every view every step.
  int views_per_step = 0;
  Vec3 background = Vec3::Zero();
};

struct TrainResult {
  SplatScene scene;
  std::vector<double> loss_trace;  // loss of the iterate entering each step
  bool aborted = false;
  std::string diagnostic;
};

/// Adam (beta 0.9/0.999, eps 1e-8) on mean, log-scale, rotation, logit
/// opacity and color. Rotation is renormalized and color clipped to [0,1]
/// after each step. A non-finite loss aborts and returns the last finite
/// iterate with a diagnostic.
TrainResult train_splats(const std::vector<PosedImage>& targets, const SplatScene& init, const TrainConfig& cfg);

/// Trailing moving average with the given window (shorter at the start).
std::vector<double> smooth_trace(const std::vector<double>& trace, int window);

}  // namespace splatop
