#pragma once

#include <map>
#include <string>
#include <vector>

#include "omnimatte/config.hpp"
#include "omnimatte/image.hpp"
#include "omnimatte/model.hpp"

namespace omnimatte {

// Smooth approximate-L0 sparsity penalty: 2*sigmoid(5x) - 1. Zero at zero,
// saturating toward 1; penalizes any nonzero alpha almost uniformly.
inline double approx_l0(double x) { return 2.0 * sigmoid(5.0 * x) - 1.0; }
inline double approx_l0_grad(double x) {
  double s = sigmoid(5.0 * x);
  return 10.0 * s * (1.0 - s);
}

// Bootstrap boundary weight: 1 - dilate(mask) + mask. Zero exactly on the
// dilated ring around the mask boundary, 1 elsewhere.
Image erosion_weight(const Image& mask, int radius);

// Objective weighting state. lambda_m applies only while the bootstrap is
// active; once the mask term first drops below mask_gate the bootstrap turns
// off for the rest of the run.
struct LossWeights {
  double lambda_r = 0.005;
  double lambda_m = 50.0;
  double lambda_w = 0.005;
  double lambda_p = 0.25;
  double gamma = 0.1;
  double mask_gate = 0.05;
  double flow_reg = 1e-3;
  bool enable_photo = false;
  bool bootstrap_active = true;

  static LossWeights from_config(const Config& c) {
    LossWeights w;
    w.lambda_r = c.lambda_r;
    w.lambda_m = c.lambda_m;
    w.lambda_w = c.lambda_w;
    w.lambda_p = c.lambda_p;
    w.gamma = c.gamma;
    w.mask_gate = c.mask_gate;
    w.flow_reg = c.flow_reg;
    w.enable_photo = c.enable_photo;
    return w;
  }
  double effective_lambda_m() const { return bootstrap_active ? lambda_m : 0.0; }
  double effective_lambda_p() const { return enable_photo ? lambda_p : 0.0; }
};

struct LossReport {
  double rgb = 0.0, reg = 0.0, mask = 0.0, flow = 0.0, alpha_warp = 0.0;
  double photo = 0.0, flow_reg = 0.0;
  double total = 0.0;
  double lambda_m_effective = 0.0;
  std::map<std::string, double> grad_norms;  // filled on request

  double weighted_total(const LossWeights& w) const {
    return rgb + w.lambda_r * reg + w.effective_lambda_m() * mask + flow +
           w.lambda_w * alpha_warp + w.effective_lambda_p() * photo +
           w.flow_reg * flow_reg;
  }
};

// ---------------------------------------------------------------------------
// Individual term values over realized forward caches. All image terms are
// means over valid pixels (and channels), so the weights keep their meaning
// independent of resolution. The L1 subgradient at 0 is 0.
// ---------------------------------------------------------------------------

// mean |target - composite| over valid pixels, per channel, averaged over T.
double loss_rgb_recon(const EpochForward& fwd, const std::vector<Image>& targets);

// mean(gamma * alpha + approx_l0(alpha)) over pixels, layers and frames.
double loss_reg(const EpochForward& fwd, double gamma);

// RMS of the boundary-eroded mask residual, averaged over layers and frames.
double loss_mask(const EpochForward& fwd,
                 const std::vector<std::vector<Image>>& masks,
                 const std::vector<std::vector<Image>>& erosion);

// Confidence-weighted L1 between the input flow and the composited flow
// layers, averaged over the T-1 flow frames.
double loss_flow_recon(const EpochForward& fwd,
                       const std::vector<FlowField>& target_flow,
                       const std::vector<Image>& confidence);

// mean |alpha_t - Warp(alpha_{t+1}, predicted flow)| over valid pixels.
double loss_alpha_warp(const EpochForward& fwd);

// Photometric warping term: warp each layer of frame t+1 back by its
// predicted flow, recomposite at t and compare against the frame. Off unless
// enabled in config. `brightness` may be null when the grid is disabled.
double loss_photo(const EpochForward& fwd, const std::vector<Image>& targets,
                  const AdjustGrid* brightness);

// mean squared flow residual; keeps the free residuals anchored at zero.
double loss_flow_residual_penalty(const ParameterSet& params);

// ---------------------------------------------------------------------------
// Full objective
// ---------------------------------------------------------------------------

// Selects which terms contribute; used to isolate terms for gradient checks.
struct TermSelect {
  bool rgb = true, reg = true, mask = true, flow = true, alpha_warp = true;
  bool photo = true, flow_reg = true;
  static TermSelect only(const std::string& name);
};

// Runs the forward pass and evaluates every enabled term. Throws
// NumericalError naming the term if any value is NaN.
LossReport total_loss(const ParameterSet& params, const TrainingInputs& inputs,
                      const Config& config, const LossWeights& weights,
                      int threads);

// Same, and accumulates d(total)/d(parameter) into `adj` (zeroed first).
// Deterministic for fixed inputs regardless of `threads`. When `want_norms`
// is set, also fills per-term gradient norms in the report (extra passes).
LossReport grad_total(const ParameterSet& params, const TrainingInputs& inputs,
                      const Config& config, const LossWeights& weights,
                      int threads, ParamAdjoints& adj, bool want_norms = false);

// Value of a single term through the same pipeline (finite-difference oracle
// entry point). `name` is one of: rgb, reg, mask, flow, alpha_warp, photo,
// flow_reg.
double term_value(const std::string& name, const ParameterSet& params,
                  const TrainingInputs& inputs, const Config& config,
                  const LossWeights& weights);

// Gradient of a single term (unweighted) into `adj`.
void term_grad(const std::string& name, const ParameterSet& params,
               const TrainingInputs& inputs, const Config& config,
               const LossWeights& weights, ParamAdjoints& adj);

}  // namespace omnimatte
