#include "omnimatte/effects.hpp"

#include <cmath>

#include "omnimatte/compositing.hpp"
#include "omnimatte/errors.hpp"
#include "omnimatte/model.hpp"
#include "omnimatte/morphology.hpp"

namespace omnimatte {

namespace {

double luma601(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

Image rescale_saturation(const Image& img, double s) {
  Image out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
      double l = luma601(r, g, b);
      out.at(x, y, 0) = clamp01(l + s * (r - l));
      out.at(x, y, 1) = clamp01(l + s * (g - l));
      out.at(x, y, 2) = clamp01(l + s * (b - l));
    }
  return out;
}

}  // namespace

std::vector<Image> color_pop(const std::vector<Image>& frames,
                             const std::vector<Image>& alphas,
                             double saturation_lo, double saturation_hi) {
  if (frames.size() != alphas.size())
    throw ValidationError("color_pop: frame/matte counts differ");
  std::vector<Image> out;
  out.reserve(frames.size());
  for (size_t t = 0; t < frames.size(); ++t) {
    if (!frames[t].same_shape(alphas[t]) &&
        (frames[t].width() != alphas[t].width() ||
         frames[t].height() != alphas[t].height()))
      throw ValidationError("color_pop: matte size differs from frame");
    Image flat = rescale_saturation(frames[t], saturation_lo);
    Image pop = rescale_saturation(frames[t], saturation_hi);
    Image o(frames[t].width(), frames[t].height(), 3);
    for (int y = 0; y < o.height(); ++y)
      for (int x = 0; x < o.width(); ++x) {
        double a = alphas[t].at(x, y);
        for (int c = 0; c < 3; ++c)
          o.at(x, y, c) = a * pop.at(x, y, c) + (1.0 - a) * flat.at(x, y, c);
      }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Image> background_replace(const LayerStack& stack,
                                      const Image& new_canvas,
                                      const std::vector<Homography>& homographies,
                                      const AdjustGrids& grids,
                                      bool warp_enabled, bool brightness_enabled) {
  const CanvasSpec& spec = stack.canvas_spec;
  if (new_canvas.width() < spec.width || new_canvas.height() < spec.height)
    throw ValidationError("background_replace: canvas smaller than the learned canvas");
  const int T = stack.frame_count();
  Homography to_px = Homography::translation(-spec.x0, -spec.y0);

  std::vector<Image> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    const OutputFrame& frame = stack.frames[t];
    const int W = frame.background.width(), H = frame.background.height();
    BackgroundRender bg = render_background(new_canvas, to_px.compose(homographies[t]),
                                            W, H, grids.warp, warp_enabled, t, T);
    OutputFrame swapped = frame;
    swapped.background = std::move(bg.image);
    Image comp = comp_over(swapped);
    out.push_back(brightness_enabled
                      ? brightness_adjust(comp, grids.brightness, t, T)
                      : std::move(comp));
  }
  return out;
}

Image stroboscopic(const LayerStack& stack,
                   const std::vector<Homography>& homographies, int interval) {
  if (interval < 1) throw ValidationError("stroboscopic: interval must be >= 1");
  const CanvasSpec& spec = stack.canvas_spec;
  const int T = stack.frame_count();

  // Clean plate: inverse-warp each background frame into canvas space and
  // over-composite (opaque, so later valid pixels win).
  Image plate = stack.canvas;
  for (int t = 0; t < T; ++t) {
    const Image& bg = stack.frames[t].background;
    Homography canvas_to_frame =
        homographies[t].inverse().compose(Homography::translation(spec.x0, spec.y0));
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        Vec2 p = canvas_to_frame.apply({double(x), double(y)});
        BilinearTaps taps = bilinear_taps(bg.width(), bg.height(), p.x, p.y);
        if (!taps.inside) continue;
        for (int c = 0; c < 3; ++c) plate.at(x, y, c) = sample_taps(bg, taps, c);
      }
  }

  // Foreground poses at the sampled frames, temporal order.
  for (int t = 0; t < T; t += interval) {
    const OutputFrame& frame = stack.frames[t];
    Homography canvas_to_frame =
        homographies[t].inverse().compose(Homography::translation(spec.x0, spec.y0));
    for (int id : frame.order) {
      const OutputLayer& layer = frame.layers[id];
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
          Vec2 p = canvas_to_frame.apply({double(x), double(y)});
          BilinearTaps taps =
              bilinear_taps(layer.alpha.width(), layer.alpha.height(), p.x, p.y);
          if (!taps.inside) continue;
          double a = sample_taps(layer.alpha, taps, 0);
          for (int c = 0; c < 3; ++c)
            plate.at(x, y, c) = a * sample_taps(layer.color, taps, c) +
                                (1.0 - a) * plate.at(x, y, c);
        }
    }
  }
  return plate;
}

Image removal_mask(const Image& alpha, double threshold, int dilate_px) {
  Image bin(alpha.width(), alpha.height(), 1);
  for (size_t k = 0; k < alpha.size(); ++k) bin[k] = alpha[k] > threshold ? 1.0 : 0.0;
  return dilate_disc(bin, dilate_px);
}

}  // namespace omnimatte
