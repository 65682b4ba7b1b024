#pragma once

#include "omnimatte/image.hpp"

namespace omnimatte {

// Intersection over union of two binary masks; pixels where `ignore` is
// nonzero are excluded. Empty union counts as a perfect 1.
double jaccard(const Image& pred, const Image& gt, const Image* ignore = nullptr);

// Boundary F-measure: precision/recall of boundary pixels matched within
// tol_px (dilation matching), F = 2PR/(P+R). tol_px <= 0 picks the default
// ceil(0.8% of the image diagonal). Both boundaries empty -> 1, one empty -> 0.
double boundary_f(const Image& pred, const Image& gt, int tol_px = 0);

// Fraction of pixels with alpha strictly above 0.2. With gt_support given,
// only pixels outside the support are counted (pure clutter).
double clutter_fraction(const Image& alpha, const Image* gt_support = nullptr);

// Peak signal-to-noise ratio for [0,1] images; `mask` restricts the mean to
// nonzero pixels. Identical images give +inf.
double psnr(const Image& a, const Image& b, const Image* mask = nullptr);

}  // namespace omnimatte
