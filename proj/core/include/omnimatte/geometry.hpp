#pragma once

#include <array>
#include <vector>

#include "omnimatte/image.hpp"

namespace omnimatte {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

// 3x3 projective transform, row-major, normalized so m[8] == 1.
class Homography {
 public:
  Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

  // Normalizes by m[8]. Throws ValidationError if m[8] ~ 0 or |det| <= 1e-9.
  static Homography from_row_major(const std::array<double, 9>& m);
  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);

  const std::array<double, 9>& m() const { return m_; }
  double det() const;

  Homography inverse() const;
  // (a.compose(b))(p) == a(b(p))
  Homography compose(const Homography& rhs) const;

  // Perspective projection of a point. Throws NumericalError when the point
  // maps to infinity (|w| <= 1e-12).
  Vec2 apply(const Vec2& p) const;

 private:
  std::array<double, 9> m_;
};

// Axis-aligned pixel rectangle holding every warped frame corner. A canvas
// pixel (u, v) sits at homography-target coordinate (x0 + u, y0 + v).
struct CanvasSpec {
  double x0 = 0.0, y0 = 0.0;
  int width = 0, height = 0;
};

// Bounding box of the warped corners of a width x height frame over all
// homographies, floored/ceiled to integer pixel bounds.
CanvasSpec canvas_from_homographies(const std::vector<Homography>& homs,
                                    int frame_width, int frame_height);

// ---------------------------------------------------------------------------
// Differentiable bilinear sampling with clamp-to-edge and a validity bit.
// Pixel centers live at integer coordinates; (x, y) is inside when it lies in
// [0, W-1] x [0, H-1].
// ---------------------------------------------------------------------------

struct BilinearTaps {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double fx = 0.0, fy = 0.0;
  bool inside = false;
};

inline BilinearTaps bilinear_taps(int width, int height, double x, double y) {
  BilinearTaps t;
  t.inside = (x >= 0.0 && x <= width - 1 && y >= 0.0 && y <= height - 1);
  double cx = x < 0.0 ? 0.0 : (x > width - 1 ? double(width - 1) : x);
  double cy = y < 0.0 ? 0.0 : (y > height - 1 ? double(height - 1) : y);
  t.x0 = static_cast<int>(std::floor(cx));
  t.y0 = static_cast<int>(std::floor(cy));
  t.x1 = t.x0 + 1 < width ? t.x0 + 1 : t.x0;
  t.y1 = t.y0 + 1 < height ? t.y0 + 1 : t.y0;
  t.fx = cx - t.x0;
  t.fy = cy - t.y0;
  return t;
}

inline double sample_taps(const Image& img, const BilinearTaps& t, int c) {
  double top = (1.0 - t.fx) * img.at(t.x0, t.y0, c) + t.fx * img.at(t.x1, t.y0, c);
  double bot = (1.0 - t.fx) * img.at(t.x0, t.y1, c) + t.fx * img.at(t.x1, t.y1, c);
  return (1.0 - t.fy) * top + t.fy * bot;
}

// d(sample)/d(x), d(sample)/d(y). Zero past the clamped edge by construction
// (duplicate taps cancel).
inline Vec2 sample_taps_pos_grad(const Image& img, const BilinearTaps& t, int c) {
  double p00 = img.at(t.x0, t.y0, c), p10 = img.at(t.x1, t.y0, c);
  double p01 = img.at(t.x0, t.y1, c), p11 = img.at(t.x1, t.y1, c);
  Vec2 g;
  g.x = (1.0 - t.fy) * (p10 - p00) + t.fy * (p11 - p01);
  g.y = (1.0 - t.fx) * (p01 - p00) + t.fx * (p11 - p10);
  return g;
}

// Scatters an adjoint into the four taps.
inline void scatter_taps(Image& d_img, const BilinearTaps& t, int c, double adj) {
  d_img.at(t.x0, t.y0, c) += (1.0 - t.fx) * (1.0 - t.fy) * adj;
  d_img.at(t.x1, t.y0, c) += t.fx * (1.0 - t.fy) * adj;
  d_img.at(t.x0, t.y1, c) += (1.0 - t.fx) * t.fy * adj;
  d_img.at(t.x1, t.y1, c) += t.fx * t.fy * adj;
}

// Convenience single-sample API. `valid`, when given, receives 1.0/0.0.
double sample_bilinear(const Image& img, double x, double y, int c,
                       double* valid = nullptr);

// out(x, y) = img(H(x + origin_x, y + origin_y)); validity 1 where the mapped
// point lands inside img.
struct WarpResult {
  Image image;
  Image validity;  // 1 channel
};
WarpResult warp_by_homography(const Image& img, const Homography& hom,
                              int out_width, int out_height,
                              double origin_x = 0.0, double origin_y = 0.0);

// Adjoint of warp_by_homography w.r.t. the source image (the homography is
// never trainable): scatters d_out back through the sampling taps.
void warp_by_homography_backward(const Homography& hom, const Image& d_out,
                                 double origin_x, double origin_y, Image& d_img);

// ---------------------------------------------------------------------------
// Coarse spatio-temporal adjustment grids (trilinear in t, y, x).
// ---------------------------------------------------------------------------

// Node lattice over the video: time_nodes() x 4 x 7 nodes, `components` values
// per node. Pixel (t, y, x) maps to grid coordinates
//   gt = t / (T-1) * (nt-1),  gy = y / (H-1) * 3,  gx = x / (W-1) * 6,
// clamped at the edges.
struct AdjustGrid {
  int nt = 0, ny = 0, nx = 0, nc = 0;
  std::vector<double> v;

  AdjustGrid() = default;
  AdjustGrid(int nt_, int ny_, int nx_, int nc_, double fill)
      : nt(nt_), ny(ny_), nx(nx_), nc(nc_),
        v(static_cast<size_t>(nt_) * ny_ * nx_ * nc_, fill) {}

  double& at(int t, int y, int x, int c = 0) {
    return v[((static_cast<size_t>(t) * ny + y) * nx + x) * nc + c];
  }
  double at(int t, int y, int x, int c = 0) const {
    return v[((static_cast<size_t>(t) * ny + y) * nx + x) * nc + c];
  }

  static int time_nodes(int frame_count) { return (frame_count + 9) / 10; }
};

// Trainable background adjustments: a per-pixel offset field (2 components)
// and a brightness scale (1 component), both trilinearly filtered.
struct AdjustGrids {
  AdjustGrid warp;        // offsets in output pixels
  AdjustGrid brightness;  // multiplicative, > 0

  static AdjustGrids neutral(int frame_count) {
    int nt = AdjustGrid::time_nodes(frame_count);
    AdjustGrids g;
    g.warp = AdjustGrid(nt, 4, 7, 2, 0.0);
    g.brightness = AdjustGrid(nt, 4, 7, 1, 1.0);
    return g;
  }
};

// The 8 lattice corners and weights for one (t, y, x) pixel.
struct TrilinearTaps {
  int t0 = 0, t1 = 0, y0 = 0, y1 = 0, x0 = 0, x1 = 0;
  double ft = 0.0, fy = 0.0, fx = 0.0;
};

TrilinearTaps trilinear_taps(const AdjustGrid& g, int t, int frame_count,
                             int y, int height, int x, int width);
double grid_value(const AdjustGrid& g, const TrilinearTaps& taps, int c);
void grid_scatter(AdjustGrid& d_g, const TrilinearTaps& taps, int c, double adj);

// Background refinement warp: out(x) = img(x + offset(t, x)) with the offset
// trilinearly filtered from `warp`. Differentiable w.r.t. img and the grid.
struct BackgroundWarpResult {
  Image image;
  Image validity;
};
BackgroundWarpResult background_warp(const Image& img, const Image& validity,
                                     const AdjustGrid& warp, int t,
                                     int frame_count);
// Accumulates adjoints of `background_warp` into d_img and d_warp given the
// adjoint of its output.
void background_warp_backward(const Image& img, const AdjustGrid& warp, int t,
                              int frame_count, const Image& d_out,
                              Image& d_img, AdjustGrid& d_warp);

// Coarse brightness scale on a composite: out(x) = img(x) * b(t, x).
Image brightness_adjust(const Image& img, const AdjustGrid& brightness, int t,
                        int frame_count);
void brightness_adjust_backward(const Image& img, const AdjustGrid& brightness,
                                int t, int frame_count, const Image& d_out,
                                Image& d_img, AdjustGrid& d_brightness);

}  // namespace omnimatte
