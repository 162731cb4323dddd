#pragma once

#include <vector>

#include "batdiff/boundary.hpp"
#include "batdiff/image.hpp"

namespace batdiff {

/// Catmull-Rom cubic (a = -0.5).
double cubic_kernel(double x);

/// A 1D linear map from `in_size` samples to `out_size` samples stored as
/// sparse rows. Boundary folding is baked into the column indices, so the
/// transpose is exact.
class ResampleMatrix {
 public:
  struct Tap {
    int index;
    double weight;
  };

  ResampleMatrix(int in_size, int out_size, std::vector<std::vector<Tap>> rows);

  /// Center-aligned bicubic map. Downscaling widens the kernel by the
  /// scale ratio (antialiasing); weights of each row are normalized.
  static ResampleMatrix bicubic(int in_size, int out_size);

  /// Gaussian blur with mirror padding followed by point sampling of input
  /// index floor((i + 0.5) * factor) for every output i.
  static ResampleMatrix blur_subsample(int in_size, int out_size, double factor,
                                       double sigma);

  int in_size() const { return in_size_; }
  int out_size() const { return out_size_; }
  const std::vector<Tap>& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }

 private:
  int in_size_;
  int out_size_;
  std::vector<std::vector<Tap>> rows_;
};

/// out = Rv * img * Rh^T per channel.
Image apply_separable(const Image& img, const ResampleMatrix& rows_map,
                      const ResampleMatrix& cols_map);
/// out = Rv^T * img * Rh per channel.
Image apply_separable_transpose(const Image& img, const ResampleMatrix& rows_map,
                                const ResampleMatrix& cols_map);

Image bicubic_resample(const Image& img, int out_h, int out_w);

}  // namespace batdiff
