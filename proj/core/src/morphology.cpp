#include "omnimatte/morphology.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace omnimatte {

namespace {

constexpr double kFar = 1e18;

// 1D squared-distance lower envelope (Felzenszwalb & Huttenlocher).
void distance_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kFar;
  z[1] = kFar;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      s = ((f[q] + q * double(q)) - (f[v[k]] + v[k] * double(v[k]))) /
          (2.0 * q - 2.0 * v[k]);
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kFar;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double dq = q - double(v[k]);
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

Image squared_distance_to(const Image& mask) {
  const int w = mask.width(), h = mask.height();
  Image dist(w, h, 1);
  // column pass
  std::vector<double> f(h), d(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = mask.at(x, y) != 0.0 ? 0.0 : kFar;
    distance_1d(f, d);
    for (int y = 0; y < h; ++y) dist.at(x, y) = d[y];
  }
  // row pass
  std::vector<double> fr(w), dr(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) fr[x] = dist.at(x, y);
    distance_1d(fr, dr);
    for (int x = 0; x < w; ++x) dist.at(x, y) = dr[x];
  }
  return dist;
}

Image dilate_disc(const Image& mask, int radius) {
  Image out(mask.width(), mask.height(), 1);
  if (radius <= 0) {
    for (size_t k = 0; k < mask.size(); ++k) out[k] = mask[k] != 0.0 ? 1.0 : 0.0;
    return out;
  }
  Image dist = squared_distance_to(mask);
  const double r2 = double(radius) * radius;
  for (size_t k = 0; k < dist.size(); ++k) out[k] = dist[k] <= r2 ? 1.0 : 0.0;
  return out;
}

Image boundary_mask(const Image& mask) {
  const int w = mask.width(), h = mask.height();
  Image out(w, h, 1);
  auto inside = [&](int x, int y) {
    return x >= 0 && x < w && y >= 0 && y < h && mask.at(x, y) != 0.0;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) == 0.0) continue;
      if (!inside(x - 1, y) || !inside(x + 1, y) || !inside(x, y - 1) ||
          !inside(x, y + 1))
        out.at(x, y) = 1.0;
    }
  return out;
}

}  // namespace omnimatte
