#include "omnimatte/flowops.hpp"

#include <cmath>
#include <limits>

#include "omnimatte/geometry.hpp"

namespace omnimatte {

FlowWarpResult warp_by_flow(const Image& img, const Image& flow_uv) {
  const int w = img.width(), h = img.height();
  FlowWarpResult r;
  r.image = Image(w, h, img.channels());
  r.validity = Image(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      BilinearTaps t = bilinear_taps(w, h, x + flow_uv.at(x, y, 0), y + flow_uv.at(x, y, 1));
      for (int c = 0; c < img.channels(); ++c)
        r.image.at(x, y, c) = sample_taps(img, t, c);
      r.validity.at(x, y) = t.inside ? 1.0 : 0.0;
    }
  return r;
}

void warp_by_flow_backward(const Image& img, const Image& flow_uv,
                           const Image& d_out, Image* d_img, Image* d_flow) {
  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      BilinearTaps t = bilinear_taps(w, h, x + flow_uv.at(x, y, 0), y + flow_uv.at(x, y, 1));
      double du = 0.0, dv = 0.0;
      for (int c = 0; c < img.channels(); ++c) {
        double adj = d_out.at(x, y, c);
        if (adj == 0.0) continue;
        if (d_img) scatter_taps(*d_img, t, c, adj);
        if (d_flow) {
          Vec2 g = sample_taps_pos_grad(img, t, c);
          du += adj * g.x;
          dv += adj * g.y;
        }
      }
      if (d_flow) {
        d_flow->at(x, y, 0) += du;
        d_flow->at(x, y, 1) += dv;
      }
    }
}

Image flow_consistency_error(const FlowField& fwd, const FlowField& bwd) {
  const int w = fwd.width(), h = fwd.height();
  Image e(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double fx = fwd.u(x, y), fy = fwd.v(x, y);
      double lx = x + fx, ly = y + fy;
      BilinearTaps t = bilinear_taps(w, h, lx, ly);
      if (!t.inside) {
        e.at(x, y) = std::numeric_limits<double>::infinity();
        continue;
      }
      double bx = sample_taps(bwd.uv, t, 0);
      double by = sample_taps(bwd.uv, t, 1);
      e.at(x, y) = std::hypot(fx + bx, fy + by);
    }
  return e;
}

Image photometric_gate(const Image& frame_t, const Image& frame_t1,
                       const FlowField& fwd, double threshold) {
  FlowWarpResult warped = warp_by_flow(frame_t1, fwd.uv);
  const int w = frame_t.width(), h = frame_t.height();
  Image gate(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double e = 0.0;
      for (int c = 0; c < 3; ++c)
        e += std::abs(255.0 * (warped.image.at(x, y, c) - frame_t.at(x, y, c)));
      e /= 3.0;
      gate.at(x, y) = e < threshold ? 1.0 : 0.0;
    }
  return gate;
}

FlowConfidence flow_confidence(const FlowField& fwd, const FlowField& bwd,
                               const Image& frame_t, const Image& frame_t1,
                               const Image& union_mask, double photo_threshold) {
  FlowConfidence conf;
  conf.e_consistency = flow_consistency_error(fwd, bwd);
  conf.w_photo = photometric_gate(frame_t, frame_t1, fwd, photo_threshold);
  const int w = fwd.width(), h = fwd.height();
  conf.w_consistency = Image(w, h, 1);
  conf.w = Image(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double e = conf.e_consistency.at(x, y);
      double wlr = std::isinf(e) ? 0.0 : std::max(1.0 - e, 0.0);
      conf.w_consistency.at(x, y) = wlr;
      conf.w.at(x, y) = wlr * conf.w_photo.at(x, y) * union_mask.at(x, y);
    }
  return conf;
}

}  // namespace omnimatte
