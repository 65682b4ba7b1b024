#pragma once

#include <set>
#include <vector>

#include "omnimatte/videodata.hpp"

namespace omnimatte {

// A (alpha, image) pair entering a composite. `values` may have any channel
// count; flow layers composite exactly like color layers.
struct CompLayer {
  const Image* alpha = nullptr;
  const Image* values = nullptr;
};

// Forward pass of back-to-front straight-alpha over compositing, keeping the
// running composite below each order slot so the adjoint pass can reuse it.
struct CompositeTrace {
  Image out;
  std::vector<Image> below;  // below[k] = composite under the k-th drawn layer
};

CompositeTrace composite_over_traced(const Image& background,
                                     const std::vector<CompLayer>& layers,
                                     const std::vector<int>& order);

// Adjoints of composite_over_traced: given d_out, accumulates into the
// background adjoint and into each layer's alpha/value adjoints.
void composite_over_backward(const CompositeTrace& trace,
                             const std::vector<CompLayer>& layers,
                             const std::vector<int>& order, const Image& d_out,
                             Image* d_background, std::vector<Image*> d_alpha,
                             std::vector<Image*> d_values);

// out = alpha * color + (1 - alpha) * below, back to front over the opaque
// background.
Image comp_over(const OutputFrame& frame);

// Composite alpha of a subset of foreground layers (no background):
// a = alpha_i + (1 - alpha_i) * a_below.
Image comp_alpha(const OutputFrame& frame, const std::set<int>& subset);

// Transmittance of layer i: 1 minus the composite alpha of the stack with
// every layer of index < i removed (layer i itself stays in the subset).
Image transmittance(const OutputFrame& frame, int layer);

// Post-processing detail transfer: adds the reconstruction residual to each
// layer color, weighted by that layer's transmittance. Uses frame.recon as
// the reconstruction the residual is measured against. Never part of the
// training loss.
void detail_transfer(LayerStack& stack, const FrameSequence& frames);

// Re-composites the frame with the given foreground layers left out.
// Removing every layer yields the background.
Image composite_without(const OutputFrame& frame, const std::set<int>& removed);

}  // namespace omnimatte
