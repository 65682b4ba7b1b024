#include "omnimatte/objective.hpp"

#include <cmath>

#include "omnimatte/errors.hpp"
#include "omnimatte/flowops.hpp"
#include "omnimatte/morphology.hpp"
#include "omnimatte/parallel.hpp"

namespace omnimatte {

Image erosion_weight(const Image& mask, int radius) {
  Image dil = dilate_disc(mask, radius);
  Image d(mask.width(), mask.height(), 1);
  for (size_t k = 0; k < d.size(); ++k) d[k] = 1.0 - dil[k] + (mask[k] != 0.0 ? 1.0 : 0.0);
  return d;
}

namespace {

// Gradient scale per term; zero skips the adjoint work for that term.
struct TermCoeffs {
  double rgb = 0, reg = 0, mask = 0, flow = 0, alpha_warp = 0, photo = 0,
         flow_reg = 0;
};

// Per-frame loss sums plus that frame's adjoint contributions. Gradients for
// shared parameters (canvas, grids) and for frame t+1 stay in task-local
// buffers and are folded in frame order afterwards, so the result is
// independent of the thread count.
struct FramePartial {
  double rgb = 0, reg = 0, mask = 0, flow = 0, alpha_warp = 0, photo = 0,
         flow_reg = 0;
  bool with_grad = false;
  std::vector<Image> d_latent_alpha, d_latent_color, d_residual;  // own frame
  std::vector<Image> d_alpha_next, d_color_next;  // realized t+1 adjoints
  Image d_canvas;                                 // realized canvas adjoint
  AdjustGrid d_warp, d_bright;
};

int count_valid(const Image& valid) {
  int n = 0;
  for (size_t k = 0; k < valid.size(); ++k)
    if (valid[k] != 0.0) ++n;
  return n;
}

// --- rgb reconstruction -----------------------------------------------------

double rgb_frame_value(const FrameForward& f, const Image& target) {
  int nv = count_valid(f.bg_valid);
  if (nv == 0) return 0.0;
  double sum = 0.0;
  for (int y = 0; y < target.height(); ++y)
    for (int x = 0; x < target.width(); ++x) {
      if (f.bg_valid.at(x, y) == 0.0) continue;
      for (int c = 0; c < 3; ++c)
        sum += std::abs(f.comp_adjusted.at(x, y, c) - target.at(x, y, c));
    }
  return sum / (3.0 * nv);
}

// --- sparsity ----------------------------------------------------------------

double reg_layer_value(const Image& alpha, double gamma) {
  double sum = 0.0;
  for (size_t k = 0; k < alpha.size(); ++k)
    sum += gamma * alpha[k] + approx_l0(alpha[k]);
  return sum / double(alpha.size());
}

// --- mask bootstrap -----------------------------------------------------------

double mask_layer_value(const Image& alpha, const Image& mask, const Image& erosion) {
  double s = 0.0;
  for (size_t k = 0; k < alpha.size(); ++k) {
    double r = erosion[k] * (mask[k] - alpha[k]);
    s += r * r;
  }
  return std::sqrt(s / double(alpha.size()));
}

// --- flow reconstruction -------------------------------------------------------

double flow_frame_value(const FrameForward& f, const Image& target_uv,
                        const Image& conf) {
  const Image& comp = f.flow_trace.out;
  double sum = 0.0;
  for (int y = 0; y < comp.height(); ++y)
    for (int x = 0; x < comp.width(); ++x) {
      double w = conf.at(x, y);
      if (w == 0.0) continue;
      sum += w * 0.5 *
             (std::abs(target_uv.at(x, y, 0) - comp.at(x, y, 0)) +
              std::abs(target_uv.at(x, y, 1) - comp.at(x, y, 1)));
    }
  return sum / double(comp.width() * comp.height());
}

}  // namespace

double loss_rgb_recon(const EpochForward& fwd, const std::vector<Image>& targets) {
  double sum = 0.0;
  for (size_t t = 0; t < fwd.frames.size(); ++t)
    sum += rgb_frame_value(fwd.frames[t], targets[t]);
  return sum / double(fwd.frames.size());
}

double loss_reg(const EpochForward& fwd, double gamma) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& f : fwd.frames)
    for (const auto& a : f.alpha) {
      sum += reg_layer_value(a, gamma);
      ++n;
    }
  return n ? sum / double(n) : 0.0;
}

double loss_mask(const EpochForward& fwd,
                 const std::vector<std::vector<Image>>& masks,
                 const std::vector<std::vector<Image>>& erosion) {
  double sum = 0.0;
  size_t n = 0;
  for (size_t t = 0; t < fwd.frames.size(); ++t)
    for (size_t i = 0; i < fwd.frames[t].alpha.size(); ++i) {
      sum += mask_layer_value(fwd.frames[t].alpha[i], masks[i][t], erosion[i][t]);
      ++n;
    }
  return n ? sum / double(n) : 0.0;
}

double loss_flow_recon(const EpochForward& fwd,
                       const std::vector<FlowField>& target_flow,
                       const std::vector<Image>& confidence) {
  double sum = 0.0;
  int n = 0;
  for (size_t t = 0; t + 1 < fwd.frames.size(); ++t) {
    sum += flow_frame_value(fwd.frames[t], target_flow[t].uv, confidence[t]);
    ++n;
  }
  return n ? sum / double(n) : 0.0;
}

double loss_alpha_warp(const EpochForward& fwd) {
  double sum = 0.0;
  int n = 0;
  for (size_t t = 0; t + 1 < fwd.frames.size(); ++t) {
    const FrameForward& f = fwd.frames[t];
    const FrameForward& fn = fwd.frames[t + 1];
    for (size_t i = 0; i < f.alpha.size(); ++i) {
      const Image& a = f.alpha[i];
      const Image& an = fn.alpha[i];
      double s = 0.0;
      int nv = 0;
      for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
          BilinearTaps taps = bilinear_taps(a.width(), a.height(),
                                            x + f.flow[i].at(x, y, 0),
                                            y + f.flow[i].at(x, y, 1));
          if (!taps.inside) continue;
          s += std::abs(a.at(x, y) - sample_taps(an, taps, 0));
          ++nv;
        }
      sum += nv ? s / nv : 0.0;
      ++n;
    }
  }
  return n ? sum / double(n) : 0.0;
}

double loss_photo(const EpochForward& fwd, const std::vector<Image>& targets,
                  const AdjustGrid* brightness) {
  const int T = static_cast<int>(fwd.frames.size());
  double sum = 0.0;
  int n = 0;
  for (int t = 0; t + 1 < T; ++t) {
    const FrameForward& f = fwd.frames[t];
    const FrameForward& fn = fwd.frames[t + 1];
    const int N = static_cast<int>(f.alpha.size());
    std::vector<Image> alpha_w(N), color_w(N);
    Image valid = f.bg_valid;
    for (int i = 0; i < N; ++i) {
      FlowWarpResult wa = warp_by_flow(fn.alpha[i], f.flow[i]);
      FlowWarpResult wc = warp_by_flow(fn.color[i], f.flow[i]);
      alpha_w[i] = std::move(wa.image);
      color_w[i] = std::move(wc.image);
      for (size_t k = 0; k < valid.size(); ++k)
        if (wa.validity[k] == 0.0) valid[k] = 0.0;
    }
    std::vector<CompLayer> layers(N);
    for (int i = 0; i < N; ++i) layers[i] = {&alpha_w[i], &color_w[i]};
    CompositeTrace trace = composite_over_traced(f.bg, layers, f.order);
    Image out = brightness ? brightness_adjust(trace.out, *brightness, t, T)
                           : trace.out;
    int nv = count_valid(valid);
    if (nv > 0) {
      double s = 0.0;
      for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
          if (valid.at(x, y) == 0.0) continue;
          for (int c = 0; c < 3; ++c)
            s += std::abs(targets[t].at(x, y, c) - out.at(x, y, c));
        }
      sum += s / (3.0 * nv);
    }
    ++n;
  }
  return n ? sum / double(n) : 0.0;
}

double loss_flow_residual_penalty(const ParameterSet& params) {
  double sum = 0.0;
  size_t n = 0;
  for (const Image& r : params.flow_residual) {
    double s = 0.0;
    for (size_t k = 0; k < r.size(); ++k) s += r[k] * r[k];
    sum += s / double(r.size());
    ++n;
  }
  return n ? sum / double(n) : 0.0;
}

namespace {

// One frame's share of every selected term, with adjoints when with_grad.
FramePartial frame_task(const ParameterSet& params, const TrainingInputs& inputs,
                        const Config& config, const EpochForward& fwd,
                        const TermSelect& select, const TermCoeffs& k, int t,
                        bool with_grad) {
  const FrameForward& f = fwd.frames[t];
  const Dataset& data = *inputs.data;
  const int T = params.frame_count, N = params.layer_count;
  const int W = params.width, H = params.height;
  const double flow_frames = T > 1 ? double(T - 1) : 1.0;

  FramePartial out;
  out.with_grad = with_grad;

  // Adjoints w.r.t. realized per-frame quantities, chained to latents at the end.
  std::vector<Image> d_alpha, d_color, d_flow;
  Image d_bg;
  bool bg_touched = false;
  if (with_grad) {
    d_alpha.assign(N, Image(W, H, 1));
    d_color.assign(N, Image(W, H, 3));
    d_flow.assign(N, Image(W, H, 2));
    d_bg = Image(W, H, 3);
    out.d_canvas = Image(fwd.canvas.width(), fwd.canvas.height(), 3);
    out.d_warp = AdjustGrid(params.grids.warp.nt, 4, 7, 2, 0.0);
    out.d_bright = AdjustGrid(params.grids.brightness.nt, 4, 7, 1, 0.0);
    out.d_alpha_next.assign(N, Image(W, H, 1));
    out.d_color_next.assign(N, Image(W, H, 3));
  }

  const Image& target = data.frames.frames[t];

  // rgb reconstruction
  if (select.rgb || k.rgb != 0.0) {
    out.rgb = rgb_frame_value(f, target);
    if (with_grad && k.rgb != 0.0) {
      int nv = count_valid(f.bg_valid);
      if (nv > 0) {
        double scale = k.rgb / (double(T) * 3.0 * nv);
        Image d_adj(W, H, 3);
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            if (f.bg_valid.at(x, y) == 0.0) continue;
            for (int c = 0; c < 3; ++c)
              d_adj.at(x, y, c) =
                  scale * l1_sign(f.comp_adjusted.at(x, y, c) - target.at(x, y, c));
          }
        Image d_comp(W, H, 3);
        if (config.enable_brightness_grid)
          brightness_adjust_backward(f.color_trace.out, params.grids.brightness,
                                     t, T, d_adj, d_comp, out.d_bright);
        else
          d_comp = std::move(d_adj);
        std::vector<CompLayer> layers(N);
        std::vector<Image*> da(N), dc(N);
        for (int i = 0; i < N; ++i) {
          layers[i] = {&f.alpha[i], &f.color[i]};
          da[i] = &d_alpha[i];
          dc[i] = &d_color[i];
        }
        composite_over_backward(f.color_trace, layers, f.order, d_comp, &d_bg, da, dc);
        bg_touched = true;
      }
    }
  }

  // alpha sparsity
  if (select.reg || k.reg != 0.0) {
    for (int i = 0; i < N; ++i) {
      out.reg += reg_layer_value(f.alpha[i], config.gamma);
      if (with_grad && k.reg != 0.0) {
        double scale = k.reg / (double(T) * N * f.alpha[i].size());
        const Image& a = f.alpha[i];
        for (size_t p = 0; p < a.size(); ++p)
          d_alpha[i][p] += scale * (config.gamma + approx_l0_grad(a[p]));
      }
    }
  }

  // mask bootstrap
  if (select.mask || k.mask != 0.0) {
    for (int i = 0; i < N; ++i) {
      const Image& m = data.masks.masks[i][t];
      const Image& e = inputs.erosion[i][t];
      double v = mask_layer_value(f.alpha[i], m, e);
      out.mask += v;
      if (with_grad && k.mask != 0.0 && v > 0.0) {
        const Image& a = f.alpha[i];
        double scale = k.mask / (double(T) * N) / (double(a.size()) * v);
        for (size_t p = 0; p < a.size(); ++p)
          d_alpha[i][p] += -scale * e[p] * (m[p] - a[p]);
      }
    }
  }

  // flow reconstruction
  if (f.has_flow && (select.flow || k.flow != 0.0)) {
    const Image& target_uv = data.flow_fwd[t].uv;
    const Image& conf = inputs.flow_confidence[t];
    out.flow = flow_frame_value(f, target_uv, conf);
    if (with_grad && k.flow != 0.0) {
      const Image& comp = f.flow_trace.out;
      Image d_comp(W, H, 2);
      double scale = k.flow / (flow_frames * 2.0 * double(W) * double(H));
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          double w = conf.at(x, y);
          if (w == 0.0) continue;
          for (int c = 0; c < 2; ++c)
            d_comp.at(x, y, c) =
                -scale * w * l1_sign(target_uv.at(x, y, c) - comp.at(x, y, c));
        }
      std::vector<CompLayer> layers(N);
      std::vector<Image*> da(N), dfl(N);
      for (int i = 0; i < N; ++i) {
        layers[i] = {&f.alpha[i], &f.flow[i]};
        da[i] = &d_alpha[i];
        dfl[i] = &d_flow[i];
      }
      composite_over_backward(f.flow_trace, layers, f.order, d_comp, nullptr, da, dfl);
    }
  }

  // alpha temporal consistency
  if (t + 1 < T && (select.alpha_warp || k.alpha_warp != 0.0)) {
    const FrameForward& fn = fwd.frames[t + 1];
    for (int i = 0; i < N; ++i) {
      const Image& a = f.alpha[i];
      const Image& an = fn.alpha[i];
      double s = 0.0;
      int nv = 0;
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          BilinearTaps taps = bilinear_taps(W, H, x + f.flow[i].at(x, y, 0),
                                            y + f.flow[i].at(x, y, 1));
          if (!taps.inside) continue;
          s += std::abs(a.at(x, y) - sample_taps(an, taps, 0));
          ++nv;
        }
      out.alpha_warp += nv ? s / nv : 0.0;
      if (with_grad && k.alpha_warp != 0.0 && nv > 0) {
        double scale = k.alpha_warp / (flow_frames * N * nv);
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            BilinearTaps taps = bilinear_taps(W, H, x + f.flow[i].at(x, y, 0),
                                              y + f.flow[i].at(x, y, 1));
            if (!taps.inside) continue;
            double warped = sample_taps(an, taps, 0);
            double g = scale * l1_sign(a.at(x, y) - warped);
            if (g == 0.0) continue;
            d_alpha[i].at(x, y) += g;
            scatter_taps(out.d_alpha_next[i], taps, 0, -g);
            Vec2 pg = sample_taps_pos_grad(an, taps, 0);
            d_flow[i].at(x, y, 0) += -g * pg.x;
            d_flow[i].at(x, y, 1) += -g * pg.y;
          }
      }
    }
  }

  // photometric warping (optional)
  if (t + 1 < T && (select.photo || k.photo != 0.0)) {
    const FrameForward& fn = fwd.frames[t + 1];
    std::vector<Image> alpha_w(N), color_w(N);
    Image valid = f.bg_valid;
    for (int i = 0; i < N; ++i) {
      FlowWarpResult wa = warp_by_flow(fn.alpha[i], f.flow[i]);
      FlowWarpResult wc = warp_by_flow(fn.color[i], f.flow[i]);
      alpha_w[i] = std::move(wa.image);
      color_w[i] = std::move(wc.image);
      for (size_t p = 0; p < valid.size(); ++p)
        if (wa.validity[p] == 0.0) valid[p] = 0.0;
    }
    std::vector<CompLayer> layers(N);
    for (int i = 0; i < N; ++i) layers[i] = {&alpha_w[i], &color_w[i]};
    CompositeTrace trace = composite_over_traced(f.bg, layers, f.order);
    const AdjustGrid* bright =
        config.enable_brightness_grid ? &params.grids.brightness : nullptr;
    Image comp_out = bright ? brightness_adjust(trace.out, *bright, t, T) : trace.out;
    int nv = count_valid(valid);
    if (nv > 0) {
      double s = 0.0;
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          if (valid.at(x, y) == 0.0) continue;
          for (int c = 0; c < 3; ++c)
            s += std::abs(target.at(x, y, c) - comp_out.at(x, y, c));
        }
      out.photo = s / (3.0 * nv);
      if (with_grad && k.photo != 0.0) {
        double scale = k.photo / (flow_frames * 3.0 * nv);
        Image d_out_img(W, H, 3);
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            if (valid.at(x, y) == 0.0) continue;
            for (int c = 0; c < 3; ++c)
              d_out_img.at(x, y, c) =
                  -scale * l1_sign(target.at(x, y, c) - comp_out.at(x, y, c));
          }
        Image d_comp(W, H, 3);
        if (bright)
          brightness_adjust_backward(trace.out, *bright, t, T, d_out_img, d_comp,
                                     out.d_bright);
        else
          d_comp = std::move(d_out_img);
        std::vector<Image> d_alpha_w(N, Image(W, H, 1)), d_color_w(N, Image(W, H, 3));
        std::vector<Image*> da(N), dc(N);
        for (int i = 0; i < N; ++i) {
          da[i] = &d_alpha_w[i];
          dc[i] = &d_color_w[i];
        }
        composite_over_backward(trace, layers, f.order, d_comp, &d_bg, da, dc);
        bg_touched = true;
        for (int i = 0; i < N; ++i) {
          warp_by_flow_backward(fn.alpha[i], f.flow[i], d_alpha_w[i],
                                &out.d_alpha_next[i], &d_flow[i]);
          warp_by_flow_backward(fn.color[i], f.flow[i], d_color_w[i],
                                &out.d_color_next[i], &d_flow[i]);
        }
      }
    }
  }

  // flow residual anchor
  if (select.flow_reg || k.flow_reg != 0.0) {
    for (int i = 0; i < N; ++i) {
      const Image& r = params.residual_at(i, t);
      double s = 0.0;
      for (size_t p = 0; p < r.size(); ++p) s += r[p] * r[p];
      out.flow_reg += s / double(r.size());
      if (with_grad && k.flow_reg != 0.0) {
        double scale = k.flow_reg / (double(T) * N * r.size()) * 2.0;
        for (size_t p = 0; p < r.size(); ++p) d_flow[i][p] += scale * r[p];
      }
    }
  }

  if (with_grad) {
    // chain realized -> latents for this frame's own parameters
    out.d_latent_alpha.resize(N);
    out.d_latent_color.resize(N);
    out.d_residual.resize(N);
    for (int i = 0; i < N; ++i) {
      Image dA(W, H, 1), dK(W, H, 3);
      const Image& a = f.alpha[i];
      const Image& c = f.color[i];
      for (size_t p = 0; p < dA.size(); ++p)
        dA[p] = d_alpha[i][p] * sigmoid_grad_from_value(a[p]);
      for (size_t p = 0; p < dK.size(); ++p)
        dK[p] = d_color[i][p] * sigmoid_grad_from_value(c[p]);
      out.d_latent_alpha[i] = std::move(dA);
      out.d_latent_color[i] = std::move(dK);
      out.d_residual[i] = std::move(d_flow[i]);  // dF/dR is the identity
    }
    // background chain: refinement warp, then homography sampling into canvas
    if (bg_touched) {
      if (config.enable_warp_grid) {
        Image d_bg_raw(W, H, 3);
        background_warp_backward(f.bg_raw, params.grids.warp, t, T, d_bg,
                                 d_bg_raw, out.d_warp);
        warp_by_homography_backward(inputs.frame_to_canvas_px[t], d_bg_raw, 0.0,
                                    0.0, out.d_canvas);
      } else {
        warp_by_homography_backward(inputs.frame_to_canvas_px[t], d_bg, 0.0, 0.0,
                                    out.d_canvas);
      }
    }
  }
  return out;
}

struct EvalResult {
  LossReport report;
  std::vector<FramePartial> partials;
};

EvalResult evaluate(const ParameterSet& params, const TrainingInputs& inputs,
                    const Config& config, const TermSelect& select,
                    const TermCoeffs& coeffs, int threads, bool with_grad,
                    const EpochForward& fwd) {
  const int T = params.frame_count, N = params.layer_count;
  EvalResult r;
  r.partials.resize(T);
  parallel_for(T, threads, [&](int t) {
    r.partials[t] = frame_task(params, inputs, config, fwd, select, coeffs, t, with_grad);
  });

  const double flow_frames = T > 1 ? double(T - 1) : 1.0;
  LossReport& rep = r.report;
  for (int t = 0; t < T; ++t) {
    rep.rgb += r.partials[t].rgb;
    rep.reg += r.partials[t].reg;
    rep.mask += r.partials[t].mask;
    rep.flow += r.partials[t].flow;
    rep.alpha_warp += r.partials[t].alpha_warp;
    rep.photo += r.partials[t].photo;
    rep.flow_reg += r.partials[t].flow_reg;
  }
  rep.rgb /= T;
  rep.reg /= double(T) * N;
  rep.mask /= double(T) * N;
  rep.flow /= flow_frames;
  rep.alpha_warp /= flow_frames * N;
  rep.photo /= flow_frames;
  rep.flow_reg /= double(T) * N;

  auto check = [&](bool enabled, double v, const char* name) {
    if (enabled && std::isnan(v))
      throw NumericalError(std::string("NaN in loss term '") + name + "'");
  };
  check(select.rgb, rep.rgb, "rgb");
  check(select.reg, rep.reg, "reg");
  check(select.mask, rep.mask, "mask");
  check(select.flow, rep.flow, "flow");
  check(select.alpha_warp, rep.alpha_warp, "alpha_warp");
  check(select.photo, rep.photo, "photo");
  check(select.flow_reg, rep.flow_reg, "flow_reg");
  return r;
}

void reduce_adjoints(const ParameterSet& params, const EpochForward& fwd,
                     std::vector<FramePartial>& partials, ParamAdjoints& adj) {
  const int T = params.frame_count, N = params.layer_count;
  Image d_canvas(fwd.canvas.width(), fwd.canvas.height(), 3);
  for (int t = 0; t < T; ++t) {
    FramePartial& p = partials[t];
    for (int i = 0; i < N; ++i) {
      Image& dst_a = adj.alpha_latent[params.idx(i, t)];
      Image& dst_k = adj.color_latent[params.idx(i, t)];
      Image& dst_r = adj.flow_residual[params.idx(i, t)];
      for (size_t q = 0; q < dst_a.size(); ++q) dst_a[q] += p.d_latent_alpha[i][q];
      for (size_t q = 0; q < dst_k.size(); ++q) dst_k[q] += p.d_latent_color[i][q];
      for (size_t q = 0; q < dst_r.size(); ++q) dst_r[q] += p.d_residual[i][q];
    }
    // contributions this frame made to frame t+1's realized alpha/color
    if (t + 1 < T) {
      for (int i = 0; i < N; ++i) {
        const Image& an = fwd.frames[t + 1].alpha[i];
        const Image& cn = fwd.frames[t + 1].color[i];
        Image& dst_a = adj.alpha_latent[params.idx(i, t + 1)];
        Image& dst_k = adj.color_latent[params.idx(i, t + 1)];
        for (size_t q = 0; q < dst_a.size(); ++q)
          dst_a[q] += p.d_alpha_next[i][q] * sigmoid_grad_from_value(an[q]);
        for (size_t q = 0; q < dst_k.size(); ++q)
          dst_k[q] += p.d_color_next[i][q] * sigmoid_grad_from_value(cn[q]);
      }
    }
    for (size_t q = 0; q < d_canvas.size(); ++q) d_canvas[q] += p.d_canvas[q];
    for (size_t q = 0; q < adj.grids.warp.v.size(); ++q)
      adj.grids.warp.v[q] += p.d_warp.v[q];
    for (size_t q = 0; q < adj.grids.brightness.v.size(); ++q)
      adj.grids.brightness.v[q] += p.d_bright.v[q];
  }
  for (size_t q = 0; q < d_canvas.size(); ++q)
    adj.canvas_latent[q] += d_canvas[q] * sigmoid_grad_from_value(fwd.canvas[q]);
}

TermCoeffs coeffs_from_weights(const LossWeights& w) {
  TermCoeffs k;
  k.rgb = 1.0;
  k.reg = w.lambda_r;
  k.mask = w.effective_lambda_m();
  k.flow = 1.0;
  k.alpha_warp = w.lambda_w;
  k.photo = w.effective_lambda_p();
  k.flow_reg = w.flow_reg;
  return k;
}

TermSelect select_for(const LossWeights& w) {
  TermSelect s;
  s.photo = w.enable_photo;
  return s;
}

double adjoint_norm(ParamAdjoints& adj, const ParameterSet& params) {
  double s = 0.0;
  ParamAdjoints& a = adj;
  for (const TensorRef& ref : adjoint_tensors(a, const_cast<ParameterSet&>(params)))
    for (size_t q = 0; q < ref.size; ++q) s += ref.data[q] * ref.data[q];
  return std::sqrt(s);
}

}  // namespace

TermSelect TermSelect::only(const std::string& name) {
  TermSelect s;
  s.rgb = s.reg = s.mask = s.flow = s.alpha_warp = s.photo = s.flow_reg = false;
  if (name == "rgb") s.rgb = true;
  else if (name == "reg") s.reg = true;
  else if (name == "mask") s.mask = true;
  else if (name == "flow") s.flow = true;
  else if (name == "alpha_warp") s.alpha_warp = true;
  else if (name == "photo") s.photo = true;
  else if (name == "flow_reg") s.flow_reg = true;
  else throw ValidationError("unknown loss term: " + name);
  return s;
}

LossReport total_loss(const ParameterSet& params, const TrainingInputs& inputs,
                      const Config& config, const LossWeights& weights,
                      int threads) {
  EpochForward fwd = forward_all(params, inputs, config, threads);
  TermCoeffs none;
  EvalResult r = evaluate(params, inputs, config, select_for(weights), none,
                          threads, false, fwd);
  r.report.lambda_m_effective = weights.effective_lambda_m();
  r.report.total = r.report.weighted_total(weights);
  return r.report;
}

LossReport grad_total(const ParameterSet& params, const TrainingInputs& inputs,
                      const Config& config, const LossWeights& weights,
                      int threads, ParamAdjoints& adj, bool want_norms) {
  EpochForward fwd = forward_all(params, inputs, config, threads);
  TermSelect select = select_for(weights);
  TermCoeffs coeffs = coeffs_from_weights(weights);
  EvalResult r = evaluate(params, inputs, config, select, coeffs, threads, true, fwd);
  adj.zero();
  reduce_adjoints(params, fwd, r.partials, adj);
  r.report.lambda_m_effective = weights.effective_lambda_m();
  r.report.total = r.report.weighted_total(weights);

  if (want_norms) {
    const char* names[] = {"rgb", "reg", "mask", "flow", "alpha_warp", "photo", "flow_reg"};
    for (const char* name : names) {
      if (std::string(name) == "photo" && !weights.enable_photo) continue;
      ParamAdjoints term_adj = ParamAdjoints::zeros_like(params);
      term_grad(name, params, inputs, config, weights, term_adj);
      r.report.grad_norms[name] = adjoint_norm(term_adj, params);
    }
  }
  return r.report;
}

double term_value(const std::string& name, const ParameterSet& params,
                  const TrainingInputs& inputs, const Config& config,
                  const LossWeights& weights) {
  if (name == "flow_reg") return loss_flow_residual_penalty(params);
  (void)weights;
  EpochForward fwd = forward_all(params, inputs, config, 1);
  TermSelect select = TermSelect::only(name);
  TermCoeffs none;
  EvalResult r = evaluate(params, inputs, config, select, none, 1, false, fwd);
  if (name == "rgb") return r.report.rgb;
  if (name == "reg") return r.report.reg;
  if (name == "mask") return r.report.mask;
  if (name == "flow") return r.report.flow;
  if (name == "alpha_warp") return r.report.alpha_warp;
  if (name == "photo") return r.report.photo;
  throw ValidationError("unknown loss term: " + name);
}

void term_grad(const std::string& name, const ParameterSet& params,
               const TrainingInputs& inputs, const Config& config,
               const LossWeights& weights, ParamAdjoints& adj) {
  (void)weights;
  EpochForward fwd = forward_all(params, inputs, config, 1);
  TermSelect select = TermSelect::only(name);
  TermCoeffs k;
  if (name == "rgb") k.rgb = 1.0;
  else if (name == "reg") k.reg = 1.0;
  else if (name == "mask") k.mask = 1.0;
  else if (name == "flow") k.flow = 1.0;
  else if (name == "alpha_warp") k.alpha_warp = 1.0;
  else if (name == "photo") k.photo = 1.0;
  else if (name == "flow_reg") k.flow_reg = 1.0;
  else throw ValidationError("unknown loss term: " + name);
  EvalResult r = evaluate(params, inputs, config, select, k, 1, true, fwd);
  adj.zero();
  reduce_adjoints(params, fwd, r.partials, adj);
}

}  // namespace omnimatte
