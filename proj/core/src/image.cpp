#include "batdiff/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "batdiff/error.hpp"

namespace batdiff {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw ArgumentError("image dimensions must be positive, got " +
                        std::to_string(height) + "x" + std::to_string(width) +
                        "x" + std::to_string(channels));
  }
  data_.assign(plane_size() * static_cast<std::size_t>(channels), fill);
}

std::span<double> Image::plane(int c) {
  return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * plane_size(),
                                          plane_size());
}

std::span<const double> Image::plane(int c) const {
  return std::span<const double>(data_).subspan(
      static_cast<std::size_t>(c) * plane_size(), plane_size());
}

bool Image::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Image& Image::operator+=(const Image& other) {
  require_same_shape(*this, other, "image addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Image& Image::operator-=(const Image& other) {
  require_same_shape(*this, other, "image subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Image& Image::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Image& Image::add_scaled(const Image& other, double s) {
  require_same_shape(*this, other, "scaled addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  return *this;
}

Image operator+(Image a, const Image& b) { return a += b; }
Image operator-(Image a, const Image& b) { return a -= b; }
Image operator*(Image a, double s) { return a *= s; }

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                     "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) +
                     "x" + std::to_string(b.channels()));
  }
}

double dot(const Image& a, const Image& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) acc += da[i] * db[i];
  return acc;
}

double squared_norm(const Image& a) { return dot(a, a); }

Image clamp01(Image img) {
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

Image crop(const Image& img, int y0, int x0, int height, int width) {
  if (y0 < 0 || x0 < 0 || y0 + height > img.height() || x0 + width > img.width()) {
    throw ShapeError("crop window outside image");
  }
  Image out(height, width, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const double* src = &img.plane(c)[static_cast<std::size_t>(y0 + y) *
                                            static_cast<std::size_t>(img.width()) +
                                        static_cast<std::size_t>(x0)];
      std::copy(src, src + width, &out.at(c, y, 0));
    }
  }
  return out;
}

}  // namespace batdiff
