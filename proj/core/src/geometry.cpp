#include "omnimatte/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "omnimatte/errors.hpp"

namespace omnimatte {

namespace {

std::array<double, 9> mat_mul(const std::array<double, 9>& a,
                              const std::array<double, 9>& b) {
  std::array<double, 9> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      r[i * 3 + j] = s;
    }
  return r;
}

double det3(const std::array<double, 9>& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) -
         m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

}  // namespace

Homography Homography::from_row_major(const std::array<double, 9>& m) {
  if (std::abs(m[8]) < 1e-12)
    throw ValidationError("homography has h33 ~ 0, cannot normalize");
  std::array<double, 9> n;
  for (int i = 0; i < 9; ++i) n[i] = m[i] / m[8];
  if (std::abs(det3(n)) <= 1e-9)
    throw ValidationError("homography is not invertible (|det| <= 1e-9)");
  Homography h;
  h.m_ = n;
  return h;
}

Homography Homography::translation(double tx, double ty) {
  Homography h;
  h.m_ = {1, 0, tx, 0, 1, ty, 0, 0, 1};
  return h;
}

double Homography::det() const { return det3(m_); }

Homography Homography::inverse() const {
  const auto& m = m_;
  double d = det3(m);
  if (std::abs(d) <= 1e-12)
    throw ValidationError("homography is not invertible");
  std::array<double, 9> inv;
  inv[0] = (m[4] * m[8] - m[5] * m[7]) / d;
  inv[1] = (m[2] * m[7] - m[1] * m[8]) / d;
  inv[2] = (m[1] * m[5] - m[2] * m[4]) / d;
  inv[3] = (m[5] * m[6] - m[3] * m[8]) / d;
  inv[4] = (m[0] * m[8] - m[2] * m[6]) / d;
  inv[5] = (m[2] * m[3] - m[0] * m[5]) / d;
  inv[6] = (m[3] * m[7] - m[4] * m[6]) / d;
  inv[7] = (m[1] * m[6] - m[0] * m[7]) / d;
  inv[8] = (m[0] * m[4] - m[1] * m[3]) / d;
  return from_row_major(inv);
}

Homography Homography::compose(const Homography& rhs) const {
  return from_row_major(mat_mul(m_, rhs.m_));
}

Vec2 Homography::apply(const Vec2& p) const {
  double w = m_[6] * p.x + m_[7] * p.y + m_[8];
  if (std::abs(w) <= 1e-12) {
    std::ostringstream os;
    os << "degenerate point (" << p.x << ", " << p.y << ") maps to infinity";
    throw NumericalError(os.str());
  }
  return {(m_[0] * p.x + m_[1] * p.y + m_[2]) / w,
          (m_[3] * p.x + m_[4] * p.y + m_[5]) / w};
}

CanvasSpec canvas_from_homographies(const std::vector<Homography>& homs,
                                    int frame_width, int frame_height) {
  double min_x = 0.0, min_y = 0.0, max_x = frame_width - 1, max_y = frame_height - 1;
  bool first = true;
  for (const auto& h : homs) {
    const Vec2 corners[4] = {{0.0, 0.0},
                             {double(frame_width - 1), 0.0},
                             {0.0, double(frame_height - 1)},
                             {double(frame_width - 1), double(frame_height - 1)}};
    for (const auto& c : corners) {
      Vec2 w = h.apply(c);
      if (first) {
        min_x = max_x = w.x;
        min_y = max_y = w.y;
        first = false;
      } else {
        min_x = std::min(min_x, w.x);
        max_x = std::max(max_x, w.x);
        min_y = std::min(min_y, w.y);
        max_y = std::max(max_y, w.y);
      }
    }
  }
  CanvasSpec spec;
  spec.x0 = std::floor(min_x);
  spec.y0 = std::floor(min_y);
  spec.width = static_cast<int>(std::ceil(max_x) - spec.x0) + 1;
  spec.height = static_cast<int>(std::ceil(max_y) - spec.y0) + 1;
  return spec;
}

double sample_bilinear(const Image& img, double x, double y, int c, double* valid) {
  BilinearTaps t = bilinear_taps(img.width(), img.height(), x, y);
  if (valid) *valid = t.inside ? 1.0 : 0.0;
  return sample_taps(img, t, c);
}

WarpResult warp_by_homography(const Image& img, const Homography& hom,
                              int out_width, int out_height,
                              double origin_x, double origin_y) {
  WarpResult r;
  r.image = Image(out_width, out_height, img.channels());
  r.validity = Image(out_width, out_height, 1);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      Vec2 p = hom.apply({x + origin_x, y + origin_y});
      BilinearTaps t = bilinear_taps(img.width(), img.height(), p.x, p.y);
      for (int c = 0; c < img.channels(); ++c)
        r.image.at(x, y, c) = sample_taps(img, t, c);
      r.validity.at(x, y) = t.inside ? 1.0 : 0.0;
    }
  }
  return r;
}

void warp_by_homography_backward(const Homography& hom, const Image& d_out,
                                 double origin_x, double origin_y, Image& d_img) {
  for (int y = 0; y < d_out.height(); ++y)
    for (int x = 0; x < d_out.width(); ++x) {
      Vec2 p = hom.apply({x + origin_x, y + origin_y});
      BilinearTaps t = bilinear_taps(d_img.width(), d_img.height(), p.x, p.y);
      for (int c = 0; c < d_out.channels(); ++c) {
        double adj = d_out.at(x, y, c);
        if (adj != 0.0) scatter_taps(d_img, t, c, adj);
      }
    }
}

TrilinearTaps trilinear_taps(const AdjustGrid& g, int t, int frame_count,
                             int y, int height, int x, int width) {
  auto axis = [](double pos, int extent, int nodes, int& i0, int& i1, double& f) {
    double gpos = extent > 1 ? pos / (extent - 1) * (nodes - 1) : 0.0;
    gpos = std::clamp(gpos, 0.0, double(nodes - 1));
    i0 = static_cast<int>(std::floor(gpos));
    i1 = i0 + 1 < nodes ? i0 + 1 : i0;
    f = gpos - i0;
  };
  TrilinearTaps taps;
  axis(t, frame_count, g.nt, taps.t0, taps.t1, taps.ft);
  axis(y, height, g.ny, taps.y0, taps.y1, taps.fy);
  axis(x, width, g.nx, taps.x0, taps.x1, taps.fx);
  return taps;
}

double grid_value(const AdjustGrid& g, const TrilinearTaps& t, int c) {
  double v = 0.0;
  const double wt[2] = {1.0 - t.ft, t.ft};
  const double wy[2] = {1.0 - t.fy, t.fy};
  const double wx[2] = {1.0 - t.fx, t.fx};
  const int ti[2] = {t.t0, t.t1}, yi[2] = {t.y0, t.y1}, xi[2] = {t.x0, t.x1};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d)
        v += wt[a] * wy[b] * wx[d] * g.at(ti[a], yi[b], xi[d], c);
  return v;
}

void grid_scatter(AdjustGrid& d_g, const TrilinearTaps& t, int c, double adj) {
  const double wt[2] = {1.0 - t.ft, t.ft};
  const double wy[2] = {1.0 - t.fy, t.fy};
  const double wx[2] = {1.0 - t.fx, t.fx};
  const int ti[2] = {t.t0, t.t1}, yi[2] = {t.y0, t.y1}, xi[2] = {t.x0, t.x1};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d)
        d_g.at(ti[a], yi[b], xi[d], c) += wt[a] * wy[b] * wx[d] * adj;
}

BackgroundWarpResult background_warp(const Image& img, const Image& validity,
                                     const AdjustGrid& warp, int t,
                                     int frame_count) {
  const int w = img.width(), h = img.height();
  BackgroundWarpResult r;
  r.image = Image(w, h, img.channels());
  r.validity = Image(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      TrilinearTaps g = trilinear_taps(warp, t, frame_count, y, h, x, w);
      double sx = x + grid_value(warp, g, 0);
      double sy = y + grid_value(warp, g, 1);
      BilinearTaps taps = bilinear_taps(w, h, sx, sy);
      for (int c = 0; c < img.channels(); ++c)
        r.image.at(x, y, c) = sample_taps(img, taps, c);
      double v = validity.empty() ? 1.0 : sample_taps(validity, taps, 0);
      r.validity.at(x, y) = (taps.inside && v > 1.0 - 1e-9) ? 1.0 : 0.0;
    }
  }
  return r;
}

void background_warp_backward(const Image& img, const AdjustGrid& warp, int t,
                              int frame_count, const Image& d_out,
                              Image& d_img, AdjustGrid& d_warp) {
  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      TrilinearTaps g = trilinear_taps(warp, t, frame_count, y, h, x, w);
      double sx = x + grid_value(warp, g, 0);
      double sy = y + grid_value(warp, g, 1);
      BilinearTaps taps = bilinear_taps(w, h, sx, sy);
      double d_sx = 0.0, d_sy = 0.0;
      for (int c = 0; c < img.channels(); ++c) {
        double adj = d_out.at(x, y, c);
        if (adj == 0.0) continue;
        scatter_taps(d_img, taps, c, adj);
        Vec2 pg = sample_taps_pos_grad(img, taps, c);
        d_sx += adj * pg.x;
        d_sy += adj * pg.y;
      }
      if (d_sx != 0.0) grid_scatter(d_warp, g, 0, d_sx);
      if (d_sy != 0.0) grid_scatter(d_warp, g, 1, d_sy);
    }
  }
}

Image brightness_adjust(const Image& img, const AdjustGrid& brightness, int t,
                        int frame_count) {
  const int w = img.width(), h = img.height();
  Image out(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      TrilinearTaps g = trilinear_taps(brightness, t, frame_count, y, h, x, w);
      double b = grid_value(brightness, g, 0);
      for (int c = 0; c < img.channels(); ++c)
        out.at(x, y, c) = img.at(x, y, c) * b;
    }
  }
  return out;
}

void brightness_adjust_backward(const Image& img, const AdjustGrid& brightness,
                                int t, int frame_count, const Image& d_out,
                                Image& d_img, AdjustGrid& d_brightness) {
  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      TrilinearTaps g = trilinear_taps(brightness, t, frame_count, y, h, x, w);
      double b = grid_value(brightness, g, 0);
      double d_b = 0.0;
      for (int c = 0; c < img.channels(); ++c) {
        double adj = d_out.at(x, y, c);
        d_img.at(x, y, c) += adj * b;
        d_b += adj * img.at(x, y, c);
      }
      if (d_b != 0.0) grid_scatter(d_brightness, g, 0, d_b);
    }
  }
}

}  // namespace omnimatte
