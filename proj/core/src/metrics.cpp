#include "omnimatte/metrics.hpp"

#include <cmath>
#include <limits>

#include "omnimatte/errors.hpp"
#include "omnimatte/morphology.hpp"

namespace omnimatte {

double jaccard(const Image& pred, const Image& gt, const Image* ignore) {
  if (!pred.same_shape(gt))
    throw ValidationError("jaccard: mask shapes differ");
  long inter = 0, uni = 0;
  for (size_t k = 0; k < pred.size(); ++k) {
    if (ignore && (*ignore)[k] != 0.0) continue;
    bool p = pred[k] != 0.0, g = gt[k] != 0.0;
    if (p && g) ++inter;
    if (p || g) ++uni;
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

double boundary_f(const Image& pred, const Image& gt, int tol_px) {
  if (!pred.same_shape(gt))
    throw ValidationError("boundary_f: mask shapes differ");
  if (tol_px <= 0) {
    double diag = std::hypot(double(pred.width()), double(pred.height()));
    tol_px = static_cast<int>(std::ceil(0.008 * diag));
  }
  Image pb = boundary_mask(pred);
  Image gb = boundary_mask(gt);
  long np = 0, ng = 0;
  for (size_t k = 0; k < pb.size(); ++k) {
    if (pb[k] != 0.0) ++np;
    if (gb[k] != 0.0) ++ng;
  }
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;

  Image gb_zone = dilate_disc(gb, tol_px);
  Image pb_zone = dilate_disc(pb, tol_px);
  long p_hit = 0, g_hit = 0;
  for (size_t k = 0; k < pb.size(); ++k) {
    if (pb[k] != 0.0 && gb_zone[k] != 0.0) ++p_hit;
    if (gb[k] != 0.0 && pb_zone[k] != 0.0) ++g_hit;
  }
  double precision = double(p_hit) / double(np);
  double recall = double(g_hit) / double(ng);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double clutter_fraction(const Image& alpha, const Image* gt_support) {
  long total = 0, visible = 0;
  for (size_t k = 0; k < alpha.size(); ++k) {
    if (gt_support && (*gt_support)[k] != 0.0) continue;
    ++total;
    if (alpha[k] > 0.2) ++visible;
  }
  return total == 0 ? 0.0 : double(visible) / double(total);
}

double psnr(const Image& a, const Image& b, const Image* mask) {
  if (!a.same_shape(b)) throw ValidationError("psnr: image shapes differ");
  double se = 0.0;
  long n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (mask && mask->at(x, y) == 0.0) continue;
      for (int c = 0; c < a.channels(); ++c) {
        double d = a.at(x, y, c) - b.at(x, y, c);
        se += d * d;
        ++n;
      }
    }
  if (n == 0) return std::numeric_limits<double>::infinity();
  double mse = se / double(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace omnimatte
