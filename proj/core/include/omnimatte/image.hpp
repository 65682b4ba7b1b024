#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace omnimatte {

// Row-major, channel-interleaved raster of doubles. All pixel math in this
// project runs in double so that analytic gradients can be checked against
// central finite differences at 1e-4 relative tolerance.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0)
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<size_t>(width) * height * channels, fill) {
    assert(width >= 0 && height >= 0 && channels >= 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  double& at(int x, int y, int c = 0) {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c >= 0 && c < channels_);
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c >= 0 && c < channels_);
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double operator[](size_t i) const { return data_[i]; }
  double& operator[](size_t i) { return data_[i]; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int width_ = 0, height_ = 0, channels_ = 0;
  std::vector<double> data_;
};

enum class FlowDirection { kForward, kBackward };

// Dense per-pixel displacement field, in pixels. Channel 0 = u (x), 1 = v (y).
struct FlowField {
  Image uv;  // 2 channels
  FlowDirection direction = FlowDirection::kForward;

  int width() const { return uv.width(); }
  int height() const { return uv.height(); }
  double u(int x, int y) const { return uv.at(x, y, 0); }
  double v(int x, int y) const { return uv.at(x, y, 1); }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// d sigmoid / dx expressed through the output value s = sigmoid(x).
inline double sigmoid_grad_from_value(double s) { return s * (1.0 - s); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// L1 subgradient convention: sign(0) = 0.
inline double l1_sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Bilinear resampling to a new size; coordinates map pixel centers so that
// corners stay fixed. Used for the optional --resize preprocessing.
Image resize_bilinear(const Image& src, int new_width, int new_height);

}  // namespace omnimatte
