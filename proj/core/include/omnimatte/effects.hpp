#pragma once

#include <vector>

#include "omnimatte/geometry.hpp"
#include "omnimatte/videodata.hpp"

namespace omnimatte {

// Blends a saturation-amplified copy of each frame over a desaturated copy,
// using the matte: out = alpha * amplify(I) + (1 - alpha) * desaturate(I).
// Saturation s rescales chroma around Rec.601 luma; lo/hi default 0 / 1.3.
std::vector<Image> color_pop(const std::vector<Image>& frames,
                             const std::vector<Image>& alphas,
                             double saturation_lo = 0.0,
                             double saturation_hi = 1.3);

// Re-renders the sequence with the canvas swapped for `new_canvas` (anchored
// at the canvas origin; must be at least canvas-sized). Goes through the same
// background/brightness path as the reconstruction, so swapping in the
// learned canvas reproduces it exactly.
std::vector<Image> background_replace(const LayerStack& stack,
                                      const Image& new_canvas,
                                      const std::vector<Homography>& homographies,
                                      const AdjustGrids& grids,
                                      bool warp_enabled, bool brightness_enabled);

// Single canvas-space image: a clean plate accumulated from the background
// layers, with the foreground omnimattes of frames {0, k, 2k, ...} composited
// over it in temporal order.
Image stroboscopic(const LayerStack& stack,
                   const std::vector<Homography>& homographies, int interval);

// Object-removal mask: alpha strictly above `threshold`, disc-dilated.
Image removal_mask(const Image& alpha, double threshold = 0.25, int dilate_px = 20);

}  // namespace omnimatte
