#include "omnimatte/model.hpp"

#include <algorithm>
#include <cmath>

#include "omnimatte/errors.hpp"
#include "omnimatte/flowops.hpp"
#include "omnimatte/morphology.hpp"
#include "omnimatte/objective.hpp"
#include "omnimatte/parallel.hpp"

namespace omnimatte {

bool ParameterSet::all_finite() const {
  for (const auto& v : alpha_latent)
    if (!v.all_finite()) return false;
  for (const auto& v : color_latent)
    if (!v.all_finite()) return false;
  for (const auto& v : flow_residual)
    if (!v.all_finite()) return false;
  if (!canvas_latent.all_finite()) return false;
  for (double v : grids.warp.v)
    if (!std::isfinite(v)) return false;
  for (double v : grids.brightness.v)
    if (!std::isfinite(v)) return false;
  return true;
}

ParamAdjoints ParamAdjoints::zeros_like(const ParameterSet& p) {
  ParamAdjoints a;
  a.alpha_latent.reserve(p.alpha_latent.size());
  for (const auto& t : p.alpha_latent)
    a.alpha_latent.emplace_back(t.width(), t.height(), t.channels());
  for (const auto& t : p.color_latent)
    a.color_latent.emplace_back(t.width(), t.height(), t.channels());
  for (const auto& t : p.flow_residual)
    a.flow_residual.emplace_back(t.width(), t.height(), t.channels());
  a.canvas_latent = Image(p.canvas_latent.width(), p.canvas_latent.height(), 3);
  a.grids.warp = AdjustGrid(p.grids.warp.nt, 4, 7, 2, 0.0);
  a.grids.brightness = AdjustGrid(p.grids.brightness.nt, 4, 7, 1, 0.0);
  return a;
}

void ParamAdjoints::zero() {
  for (auto& t : alpha_latent) t.fill(0.0);
  for (auto& t : color_latent) t.fill(0.0);
  for (auto& t : flow_residual) t.fill(0.0);
  canvas_latent.fill(0.0);
  std::fill(grids.warp.v.begin(), grids.warp.v.end(), 0.0);
  std::fill(grids.brightness.v.begin(), grids.brightness.v.end(), 0.0);
}

namespace {

template <typename AlphaVec, typename ColorVec, typename ResidualVec,
          typename CanvasT, typename GridsT>
std::vector<TensorRef> enumerate_tensors(int layers, int frames, AlphaVec& alpha,
                                         ColorVec& color, ResidualVec& residual,
                                         CanvasT& canvas, GridsT& grids) {
  std::vector<TensorRef> refs;
  auto add_stack = [&](const char* base, auto& vec) {
    for (int i = 0; i < layers; ++i)
      for (int t = 0; t < frames; ++t) {
        Image& img = vec[i * frames + t];
        refs.push_back({std::string(base) + "/" + std::to_string(i) + "/" +
                            std::to_string(t),
                        img.data(), img.size()});
      }
  };
  add_stack("alpha_latent", alpha);
  add_stack("color_latent", color);
  add_stack("flow_residual", residual);
  refs.push_back({"canvas_latent", canvas.data(), canvas.size()});
  refs.push_back({"warp_grid", grids.warp.v.data(), grids.warp.v.size()});
  refs.push_back({"brightness_grid", grids.brightness.v.data(), grids.brightness.v.size()});
  return refs;
}

}  // namespace

std::vector<TensorRef> parameter_tensors(ParameterSet& p) {
  return enumerate_tensors(p.layer_count, p.frame_count, p.alpha_latent,
                           p.color_latent, p.flow_residual, p.canvas_latent,
                           p.grids);
}

std::vector<TensorRef> adjoint_tensors(ParamAdjoints& a, const ParameterSet& p) {
  return enumerate_tensors(p.layer_count, p.frame_count, a.alpha_latent,
                           a.color_latent, a.flow_residual, a.canvas_latent,
                           a.grids);
}

TrainingInputs prepare_inputs(const Dataset& data, const Config& config) {
  TrainingInputs in;
  in.data = &data;
  const int T = data.frame_count();
  const int N = data.layer_count();
  const int W = data.frames.width, H = data.frames.height;

  in.canvas_spec = canvas_from_homographies(data.homographies, W, H);
  in.frame_to_canvas_px.reserve(T);
  Homography to_px = Homography::translation(-in.canvas_spec.x0, -in.canvas_spec.y0);
  for (int t = 0; t < T; ++t)
    in.frame_to_canvas_px.push_back(to_px.compose(data.homographies[t]));

  in.union_mask.reserve(T);
  for (int t = 0; t < T; ++t) {
    Image u(W, H, 1, 0.0);
    for (int i = 0; i < N; ++i)
      for (size_t k = 0; k < u.size(); ++k)
        if (data.masks.masks[i][t][k] != 0.0) u[k] = 1.0;
    in.union_mask.push_back(std::move(u));
  }

  in.flow_confidence.reserve(T - 1);
  for (int t = 0; t + 1 < T; ++t) {
    FlowConfidence conf = flow_confidence(data.flow_fwd[t], data.flow_bwd[t],
                                          data.frames.frames[t], data.frames.frames[t + 1],
                                          in.union_mask[t], config.beta);
    in.flow_confidence.push_back(std::move(conf.w));
  }

  in.erosion.resize(N);
  in.masked_flow.resize(N);
  for (int i = 0; i < N; ++i) {
    in.erosion[i].reserve(T);
    in.masked_flow[i].reserve(T);
    for (int t = 0; t < T; ++t) {
      in.erosion[i].push_back(erosion_weight(data.masks.masks[i][t], config.dilate_radius));
      Image mf(W, H, 2, 0.0);
      if (t + 1 < T) {
        const Image& m = data.masks.masks[i][t];
        const Image& f = data.flow_fwd[t].uv;
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x)
            if (m.at(x, y) != 0.0) {
              mf.at(x, y, 0) = f.at(x, y, 0);
              mf.at(x, y, 1) = f.at(x, y, 1);
            }
      }
      in.masked_flow[i].push_back(std::move(mf));
    }
  }

  // The background is static in canvas space, so its apparent motion is the
  // camera's: F_bg(p) = H_{t+1}^{-1}(H_t(p)) - p.
  in.background_flow.reserve(T - 1);
  for (int t = 0; t + 1 < T; ++t) {
    Homography step = data.homographies[t + 1].inverse().compose(data.homographies[t]);
    Image f(W, H, 2);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        Vec2 q = step.apply({double(x), double(y)});
        f.at(x, y, 0) = q.x - x;
        f.at(x, y, 1) = q.y - y;
      }
    in.background_flow.push_back(std::move(f));
  }
  return in;
}

BackgroundRender render_background(const Image& canvas, const Homography& frame_to_canvas_px,
                                   int width, int height, const AdjustGrid& warp_grid,
                                   bool warp_enabled, int t, int frame_count) {
  WarpResult raw = warp_by_homography(canvas, frame_to_canvas_px, width, height);
  BackgroundRender r;
  if (warp_enabled) {
    BackgroundWarpResult adj = background_warp(raw.image, raw.validity, warp_grid, t, frame_count);
    r.image = std::move(adj.image);
    r.validity = std::move(adj.validity);
  } else {
    r.image = std::move(raw.image);
    r.validity = std::move(raw.validity);
  }
  return r;
}

FrameForward forward_frame(const ParameterSet& params, const TrainingInputs& inputs,
                           const Config& config, const Image& canvas, int t) {
  const int T = params.frame_count, N = params.layer_count;
  const int W = params.width, H = params.height;
  FrameForward f;
  f.t = t;
  f.order = inputs.data->masks.order[t];
  f.alpha.resize(N);
  f.color.resize(N);
  f.flow.resize(N);
  for (int i = 0; i < N; ++i) {
    const Image& A = params.alpha_at(i, t);
    const Image& K = params.color_at(i, t);
    Image a(W, H, 1), c(W, H, 3);
    for (size_t k = 0; k < A.size(); ++k) a[k] = sigmoid(A[k]);
    for (size_t k = 0; k < K.size(); ++k) c[k] = sigmoid(K[k]);
    f.alpha[i] = std::move(a);
    f.color[i] = std::move(c);

    const Image& R = params.residual_at(i, t);
    const Image& mf = inputs.masked_flow[i][t];
    Image fl(W, H, 2);
    for (size_t k = 0; k < fl.size(); ++k) fl[k] = mf[k] + R[k];
    f.flow[i] = std::move(fl);
  }

  WarpResult raw = warp_by_homography(canvas, inputs.frame_to_canvas_px[t], W, H);
  f.bg_raw = std::move(raw.image);
  f.bg_raw_valid = std::move(raw.validity);
  if (config.enable_warp_grid) {
    BackgroundWarpResult adj =
        background_warp(f.bg_raw, f.bg_raw_valid, params.grids.warp, t, T);
    f.bg = std::move(adj.image);
    f.bg_valid = std::move(adj.validity);
  } else {
    f.bg = f.bg_raw;
    f.bg_valid = f.bg_raw_valid;
  }

  const std::vector<int>& order = f.order;
  std::vector<CompLayer> color_layers(N);
  for (int i = 0; i < N; ++i) color_layers[i] = {&f.alpha[i], &f.color[i]};
  f.color_trace = composite_over_traced(f.bg, color_layers, order);
  f.comp_adjusted = config.enable_brightness_grid
                        ? brightness_adjust(f.color_trace.out, params.grids.brightness, t, T)
                        : f.color_trace.out;

  if (t + 1 < T) {
    f.has_flow = true;
    std::vector<CompLayer> flow_layers(N);
    for (int i = 0; i < N; ++i) flow_layers[i] = {&f.alpha[i], &f.flow[i]};
    f.flow_trace = composite_over_traced(inputs.background_flow[t], flow_layers, order);
  }
  return f;
}

EpochForward forward_all(const ParameterSet& params, const TrainingInputs& inputs,
                         const Config& config, int threads) {
  EpochForward e;
  e.canvas = Image(params.canvas_latent.width(), params.canvas_latent.height(), 3);
  for (size_t k = 0; k < e.canvas.size(); ++k)
    e.canvas[k] = sigmoid(params.canvas_latent[k]);
  e.frames.resize(params.frame_count);
  parallel_for(params.frame_count, threads, [&](int t) {
    e.frames[t] = forward_frame(params, inputs, config, e.canvas, t);
  });
  return e;
}

LayerStack realize_stack(const ParameterSet& params, const TrainingInputs& inputs,
                         const Config& config, int threads) {
  EpochForward fwd = forward_all(params, inputs, config, threads);
  LayerStack stack;
  stack.canvas = std::move(fwd.canvas);
  stack.canvas_spec = inputs.canvas_spec;
  stack.frames.resize(params.frame_count);
  for (int t = 0; t < params.frame_count; ++t) {
    FrameForward& f = fwd.frames[t];
    OutputFrame& out = stack.frames[t];
    out.order = inputs.data->masks.order[t];
    out.background = std::move(f.bg);
    out.background_validity = std::move(f.bg_valid);
    out.recon = std::move(f.comp_adjusted);
    out.layers.resize(params.layer_count);
    for (int i = 0; i < params.layer_count; ++i) {
      out.layers[i].alpha = std::move(f.alpha[i]);
      out.layers[i].color = std::move(f.color[i]);
      out.layers[i].flow = std::move(f.flow[i]);
    }
  }
  return stack;
}

ParameterSet init_parameters(const TrainingInputs& inputs, const Config& config) {
  (void)config;
  const Dataset& data = *inputs.data;
  const int T = data.frame_count(), N = data.layer_count();
  const int W = data.frames.width, H = data.frames.height;

  ParameterSet p;
  p.frame_count = T;
  p.layer_count = N;
  p.width = W;
  p.height = H;
  p.canvas_spec = inputs.canvas_spec;

  p.alpha_latent.reserve(size_t(N) * T);
  p.color_latent.reserve(size_t(N) * T);
  p.flow_residual.reserve(size_t(N) * T);
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      const Image& m = data.masks.masks[i][t];
      Image a(W, H, 1);
      for (size_t k = 0; k < a.size(); ++k) a[k] = logit(0.9 * m[k] + 0.05);
      p.alpha_latent.push_back(std::move(a));

      const Image& frame = data.frames.frames[t];
      Image c(W, H, 3);
      for (size_t k = 0; k < c.size(); ++k)
        c[k] = logit(std::clamp(frame[k], 0.01, 0.99));
      p.color_latent.push_back(std::move(c));

      p.flow_residual.emplace_back(W, H, 2, 0.0);
    }

  // Canvas: per-pixel, per-channel median over the frames that see the pixel.
  const CanvasSpec& spec = inputs.canvas_spec;
  p.canvas_latent = Image(spec.width, spec.height, 3);
  std::vector<Homography> canvas_to_frame(T);
  for (int t = 0; t < T; ++t)
    canvas_to_frame[t] = inputs.frame_to_canvas_px[t].inverse();
  std::vector<double> samples;
  samples.reserve(T);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      for (int c = 0; c < 3; ++c) {
        samples.clear();
        for (int t = 0; t < T; ++t) {
          Vec2 q = canvas_to_frame[t].apply({double(x), double(y)});
          BilinearTaps taps = bilinear_taps(W, H, q.x, q.y);
          if (!taps.inside) continue;
          samples.push_back(sample_taps(data.frames.frames[t], taps, c));
        }
        double med = 0.5;
        if (!samples.empty()) {
          size_t mid = samples.size() / 2;
          std::nth_element(samples.begin(), samples.begin() + mid, samples.end());
          med = samples[mid];
          if (samples.size() % 2 == 0) {
            double lower = *std::max_element(samples.begin(), samples.begin() + mid);
            med = 0.5 * (med + lower);
          }
        }
        p.canvas_latent.at(x, y, c) = logit(std::clamp(med, 0.01, 0.99));
      }

  p.grids = AdjustGrids::neutral(T);
  return p;
}

}  // namespace omnimatte
