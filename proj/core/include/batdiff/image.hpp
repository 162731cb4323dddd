#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace batdiff {

struct Size2 {
  int height = 0;
  int width = 0;

  friend bool operator==(const Size2&, const Size2&) = default;
};

/// Dense planar raster (channel-major, then row-major). Values are nominally
/// in [0,1] but intermediate states of the pipeline are unconstrained.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  Size2 size() const { return {height_, width_}; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t element_count() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> plane(int c);
  std::span<const double> plane(int c) const;

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  bool all_finite() const;

  Image& operator+=(const Image& other);
  Image& operator-=(const Image& other);
  Image& operator*=(double s);
  /// this += s * other
  Image& add_scaled(const Image& other, double s);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

Image operator+(Image a, const Image& b);
Image operator-(Image a, const Image& b);
Image operator*(Image a, double s);

/// Throws ShapeError naming `what` when shapes differ.
void require_same_shape(const Image& a, const Image& b, const char* what);

double dot(const Image& a, const Image& b);
double squared_norm(const Image& a);
Image clamp01(Image img);
/// Copy of a rectangular window, all channels.
Image crop(const Image& img, int y0, int x0, int height, int width);

}  // namespace batdiff
