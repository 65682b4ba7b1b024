#pragma once

#include "omnimatte/image.hpp"

namespace omnimatte {

// Backward warp: out(p) = img(p + flow(p)), clamp-to-edge bilinear, with a
// validity channel. Differentiable w.r.t. img and flow.
struct FlowWarpResult {
  Image image;
  Image validity;
};
FlowWarpResult warp_by_flow(const Image& img, const Image& flow_uv);
void warp_by_flow_backward(const Image& img, const Image& flow_uv,
                           const Image& d_out, Image* d_img, Image* d_flow);

// Forward-backward consistency error e(p) = |fwd(p) + bwd(p + fwd(p))|_2,
// with bilinear lookup into bwd. Pixels whose lookup leaves the frame get
// +inf (they turn into zero confidence downstream).
Image flow_consistency_error(const FlowField& fwd, const FlowField& bwd);

// Photometric gate: 1 where the mean absolute per-channel difference between
// frame_t and frame_t1 warped back by fwd, on a 0-255 scale, is strictly
// below `threshold`.
Image photometric_gate(const Image& frame_t, const Image& frame_t1,
                       const FlowField& fwd, double threshold);

// Per-pixel confidence of the precomputed flow: consistency score times the
// photometric gate times the union object mask.
struct FlowConfidence {
  Image w;             // final confidence in [0, 1]
  Image e_consistency; // pixels of forward-backward error (+inf sentinel)
  Image w_consistency; // max(1 - e, 0)
  Image w_photo;       // 0/1 gate
};
FlowConfidence flow_confidence(const FlowField& fwd, const FlowField& bwd,
                               const Image& frame_t, const Image& frame_t1,
                               const Image& union_mask, double photo_threshold);

}  // namespace omnimatte
