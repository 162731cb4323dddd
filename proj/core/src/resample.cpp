#include "batdiff/resample.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "batdiff/error.hpp"

namespace batdiff {
namespace {

std::vector<ResampleMatrix::Tap> fold_row(const std::vector<std::pair<int, double>>& raw,
                                          int in_size, bool normalize) {
  std::map<int, double> merged;
  double total = 0.0;
  for (auto [j, w] : raw) {
    if (w == 0.0) continue;
    merged[fold_index(j, in_size, Boundary::kMirror)] += w;
    total += w;
  }
  std::vector<ResampleMatrix::Tap> row;
  row.reserve(merged.size());
  for (auto [j, w] : merged) {
    row.push_back({j, normalize ? w / total : w});
  }
  return row;
}

// Applies `m` along the vertical axis of one plane.
void apply_rows(std::span<const double> src, int width, const ResampleMatrix& m,
                std::span<double> dst) {
  const auto w = static_cast<std::size_t>(width);
  for (int o = 0; o < m.out_size(); ++o) {
    double* out = &dst[static_cast<std::size_t>(o) * w];
    std::fill(out, out + width, 0.0);
    for (const auto& tap : m.row(o)) {
      const double* in = &src[static_cast<std::size_t>(tap.index) * w];
      for (std::size_t x = 0; x < w; ++x) out[x] += tap.weight * in[x];
    }
  }
}

void apply_rows_transpose(std::span<const double> src, int width,
                          const ResampleMatrix& m, std::span<double> dst) {
  const auto w = static_cast<std::size_t>(width);
  std::fill(dst.begin(), dst.end(), 0.0);
  for (int o = 0; o < m.out_size(); ++o) {
    const double* in = &src[static_cast<std::size_t>(o) * w];
    for (const auto& tap : m.row(o)) {
      double* out = &dst[static_cast<std::size_t>(tap.index) * w];
      for (std::size_t x = 0; x < w; ++x) out[x] += tap.weight * in[x];
    }
  }
}

// Applies `m` along the horizontal axis of one plane.
void apply_cols(std::span<const double> src, int height, int in_width,
                const ResampleMatrix& m, std::span<double> dst) {
  const int out_w = m.out_size();
  for (int y = 0; y < height; ++y) {
    const double* in = &src[static_cast<std::size_t>(y) * static_cast<std::size_t>(in_width)];
    double* out = &dst[static_cast<std::size_t>(y) * static_cast<std::size_t>(out_w)];
    for (int o = 0; o < out_w; ++o) {
      double acc = 0.0;
      for (const auto& tap : m.row(o)) acc += tap.weight * in[tap.index];
      out[o] = acc;
    }
  }
}

void apply_cols_transpose(std::span<const double> src, int height,
                          const ResampleMatrix& m, std::span<double> dst) {
  const int in_w = m.in_size();
  const int out_w = m.out_size();
  std::fill(dst.begin(), dst.end(), 0.0);
  for (int y = 0; y < height; ++y) {
    const double* in = &src[static_cast<std::size_t>(y) * static_cast<std::size_t>(out_w)];
    double* out = &dst[static_cast<std::size_t>(y) * static_cast<std::size_t>(in_w)];
    for (int o = 0; o < out_w; ++o) {
      for (const auto& tap : m.row(o)) out[tap.index] += tap.weight * in[o];
    }
  }
}

}  // namespace

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

ResampleMatrix::ResampleMatrix(int in_size, int out_size,
                               std::vector<std::vector<Tap>> rows)
    : in_size_(in_size), out_size_(out_size), rows_(std::move(rows)) {
  if (static_cast<int>(rows_.size()) != out_size_) {
    throw ShapeError("resample matrix row count does not match output size");
  }
}

ResampleMatrix ResampleMatrix::bicubic(int in_size, int out_size) {
  if (in_size < 1 || out_size < 1) throw ArgumentError("resample sizes must be >= 1");
  const double scale = static_cast<double>(out_size) / static_cast<double>(in_size);
  const double kscale = std::min(scale, 1.0);
  const double support = 2.0 / kscale;
  std::vector<std::vector<Tap>> rows;
  rows.reserve(static_cast<std::size_t>(out_size));
  std::vector<std::pair<int, double>> raw;
  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) / scale - 0.5;
    raw.clear();
    const int lo = static_cast<int>(std::floor(center - support));
    const int hi = static_cast<int>(std::ceil(center + support));
    for (int j = lo; j <= hi; ++j) {
      const double w = kscale * cubic_kernel(kscale * (center - j));
      raw.emplace_back(j, w);
    }
    rows.push_back(fold_row(raw, in_size, true));
  }
  return ResampleMatrix(in_size, out_size, std::move(rows));
}

ResampleMatrix ResampleMatrix::blur_subsample(int in_size, int out_size, double factor,
                                              double sigma) {
  if (in_size < 1 || out_size < 1) throw ArgumentError("resample sizes must be >= 1");
  if (sigma < 0.0) throw ArgumentError("blur sigma must be >= 0");
  std::vector<double> taps{1.0};
  int radius = 0;
  if (sigma > 0.0) {
    radius = static_cast<int>(std::ceil(3.0 * sigma));
    taps.assign(static_cast<std::size_t>(2 * radius + 1), 0.0);
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      const double w = std::exp(-0.5 * k * k / (sigma * sigma));
      taps[static_cast<std::size_t>(k + radius)] = w;
      total += w;
    }
    for (double& w : taps) w /= total;
  }
  std::vector<std::vector<Tap>> rows;
  rows.reserve(static_cast<std::size_t>(out_size));
  std::vector<std::pair<int, double>> raw;
  for (int o = 0; o < out_size; ++o) {
    const int sample = std::min(static_cast<int>(std::floor((o + 0.5) * factor)), in_size - 1);
    raw.clear();
    for (int k = -radius; k <= radius; ++k) {
      raw.emplace_back(sample + k, taps[static_cast<std::size_t>(k + radius)]);
    }
    rows.push_back(fold_row(raw, in_size, false));
  }
  return ResampleMatrix(in_size, out_size, std::move(rows));
}

Image apply_separable(const Image& img, const ResampleMatrix& rows_map,
                      const ResampleMatrix& cols_map) {
  if (img.height() != rows_map.in_size() || img.width() != cols_map.in_size()) {
    throw ShapeError("separable map input size does not match image");
  }
  Image tmp(rows_map.out_size(), img.width(), img.channels());
  Image out(rows_map.out_size(), cols_map.out_size(), img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    apply_rows(img.plane(c), img.width(), rows_map, tmp.plane(c));
    apply_cols(tmp.plane(c), tmp.height(), tmp.width(), cols_map, out.plane(c));
  }
  return out;
}

Image apply_separable_transpose(const Image& img, const ResampleMatrix& rows_map,
                                const ResampleMatrix& cols_map) {
  if (img.height() != rows_map.out_size() || img.width() != cols_map.out_size()) {
    throw ShapeError("separable adjoint input size does not match image");
  }
  Image tmp(img.height(), cols_map.in_size(), img.channels());
  Image out(rows_map.in_size(), cols_map.in_size(), img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    apply_cols_transpose(img.plane(c), img.height(), cols_map, tmp.plane(c));
    apply_rows_transpose(tmp.plane(c), tmp.width(), rows_map, out.plane(c));
  }
  return out;
}

Image bicubic_resample(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("bicubic_resample: target size must be >= 1");
  return apply_separable(img, ResampleMatrix::bicubic(img.height(), out_h),
                         ResampleMatrix::bicubic(img.width(), out_w));
}

}  // namespace batdiff
