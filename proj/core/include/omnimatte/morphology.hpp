#pragma once

#include "omnimatte/image.hpp"

namespace omnimatte {

// Squared Euclidean distance from each pixel to the nearest pixel where
// `mask` is nonzero (two-pass lower-envelope transform). Pixels of an
// all-zero mask get a large finite sentinel.
Image squared_distance_to(const Image& mask);

// Binary dilation with a Euclidean disc: output is 1 wherever some mask pixel
// lies within `radius` (inclusive) of the pixel center. radius 0 is identity.
Image dilate_disc(const Image& mask, int radius);

// Set of pixels with a 4-neighbor outside the mask (pixels beyond the image
// border count as outside).
Image boundary_mask(const Image& mask);

}  // namespace omnimatte
