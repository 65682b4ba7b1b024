#pragma once

#include <string>
#include <vector>

#include "omnimatte/compositing.hpp"
#include "omnimatte/config.hpp"
#include "omnimatte/geometry.hpp"
#include "omnimatte/videodata.hpp"

namespace omnimatte {

// Every trainable unknown. Alpha and color live as pre-sigmoid latents so the
// realized values stay strictly inside (0, 1) with no clamping anywhere in
// the differentiable path. Per-layer flow is the input flow masked to the
// layer plus a free residual.
struct ParameterSet {
  int frame_count = 0, layer_count = 0, width = 0, height = 0;
  CanvasSpec canvas_spec;
  std::vector<Image> alpha_latent;   // [i * T + t], 1 channel
  std::vector<Image> color_latent;   // [i * T + t], 3 channels
  std::vector<Image> flow_residual;  // [i * T + t], 2 channels
  Image canvas_latent;               // 3 channels, canvas-sized
  AdjustGrids grids;

  int idx(int layer, int t) const { return layer * frame_count + t; }
  Image& alpha_at(int layer, int t) { return alpha_latent[idx(layer, t)]; }
  const Image& alpha_at(int layer, int t) const { return alpha_latent[idx(layer, t)]; }
  Image& color_at(int layer, int t) { return color_latent[idx(layer, t)]; }
  const Image& color_at(int layer, int t) const { return color_latent[idx(layer, t)]; }
  Image& residual_at(int layer, int t) { return flow_residual[idx(layer, t)]; }
  const Image& residual_at(int layer, int t) const { return flow_residual[idx(layer, t)]; }

  bool all_finite() const;
};

// Adjoint buffers, one per parameter tensor.
struct ParamAdjoints {
  std::vector<Image> alpha_latent, color_latent, flow_residual;
  Image canvas_latent;
  AdjustGrids grids;

  static ParamAdjoints zeros_like(const ParameterSet& p);
  void zero();
};

// Flat named view over either structure, in a fixed enumeration order (the
// optimizer and the checkpoint format both rely on the order being stable).
struct TensorRef {
  std::string name;
  double* data = nullptr;
  size_t size = 0;
};
std::vector<TensorRef> parameter_tensors(ParameterSet& p);
std::vector<TensorRef> adjoint_tensors(ParamAdjoints& a, const ParameterSet& p);

// Immutable per-dataset quantities derived once before optimization.
struct TrainingInputs {
  const Dataset* data = nullptr;
  CanvasSpec canvas_spec;
  std::vector<Homography> frame_to_canvas_px;  // H_t composed with -origin
  std::vector<Image> flow_confidence;          // T-1 entries
  std::vector<std::vector<Image>> erosion;     // [layer][t], bootstrap weights
  std::vector<std::vector<Image>> masked_flow; // [layer][t], 2ch; last frame zero
  std::vector<Image> background_flow;          // T-1, induced by the homographies
  std::vector<Image> union_mask;               // per frame

  int frame_count() const { return data->frame_count(); }
  int layer_count() const { return data->layer_count(); }
};
TrainingInputs prepare_inputs(const Dataset& data, const Config& config);

// Forward-pass cache for one frame; holds everything the loss adjoints need.
struct FrameForward {
  int t = 0;
  std::vector<int> order;    // back to front
  std::vector<Image> alpha;  // realized, per layer
  std::vector<Image> color;
  std::vector<Image> flow;   // masked input flow + residual
  Image bg_raw;              // canvas sampled through the homography
  Image bg_raw_valid;
  Image bg;                  // after the refinement warp grid
  Image bg_valid;
  CompositeTrace color_trace;
  Image comp_adjusted;       // after the brightness grid
  CompositeTrace flow_trace; // only for t < T-1
  bool has_flow = false;
};

struct EpochForward {
  Image canvas;  // realized from the latent once per epoch
  std::vector<FrameForward> frames;
};

// Renders the time-t background from a canvas image: homography sampling plus
// the (optional) refinement warp. Shared by training, effects and rendering so
// their outputs agree bit for bit.
struct BackgroundRender {
  Image image;
  Image validity;
};
BackgroundRender render_background(const Image& canvas, const Homography& frame_to_canvas_px,
                                   int width, int height, const AdjustGrid& warp_grid,
                                   bool warp_enabled, int t, int frame_count);

FrameForward forward_frame(const ParameterSet& params, const TrainingInputs& inputs,
                           const Config& config, const Image& canvas, int t);
EpochForward forward_all(const ParameterSet& params, const TrainingInputs& inputs,
                         const Config& config, int threads);

// Realizes the decomposition for output: omnimattes, background frames,
// reconstructions and the canvas.
LayerStack realize_stack(const ParameterSet& params, const TrainingInputs& inputs,
                         const Config& config, int threads);

// logit-space initialization: alphas pulled to the input masks, colors to the
// frames, canvas to the per-pixel median of the inverse-warped frames.
ParameterSet init_parameters(const TrainingInputs& inputs, const Config& config);

}  // namespace omnimatte
