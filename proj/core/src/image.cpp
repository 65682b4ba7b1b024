#include "omnimatte/image.hpp"

#include "omnimatte/geometry.hpp"

namespace omnimatte {

Image resize_bilinear(const Image& src, int new_width, int new_height) {
  if (src.width() == new_width && src.height() == new_height) return src;
  Image out(new_width, new_height, src.channels());
  double sx = new_width > 1 ? double(src.width() - 1) / (new_width - 1) : 0.0;
  double sy = new_height > 1 ? double(src.height() - 1) / (new_height - 1) : 0.0;
  for (int y = 0; y < new_height; ++y) {
    for (int x = 0; x < new_width; ++x) {
      BilinearTaps t = bilinear_taps(src.width(), src.height(), x * sx, y * sy);
      for (int c = 0; c < src.channels(); ++c)
        out.at(x, y, c) = sample_taps(src, t, c);
    }
  }
  return out;
}

}  // namespace omnimatte
