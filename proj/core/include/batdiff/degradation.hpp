#pragma once

#include <random>

#include "batdiff/image.hpp"
#include "batdiff/resample.hpp"

namespace batdiff {

enum class DegradationMode {
  kBicubic,
  kBlurSubsample,
};

/// The forward model y = D(x) + n.
struct DegradationModel {
  double scale_factor = 4.0;
  DegradationMode mode = DegradationMode::kBicubic;
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;

  void validate() const;
};

/// floor(hr / f), tolerant to the rounding of products like 40 * 3.15.
int lr_extent(int hr_extent, double scale_factor);
/// floor(lr * f) with the same tolerance.
int hr_extent(int lr_extent, double scale_factor);
Size2 lr_size(Size2 hr, double scale_factor);
Size2 hr_size(Size2 lr, double scale_factor);

/// Precomputed separable matrices for one HR grid; reuse across many
/// applications of D and D^T.
class DegradationOperator {
 public:
  DegradationOperator(const DegradationModel& model, Size2 hr);

  Size2 hr() const { return hr_; }
  Size2 lr() const { return lr_; }
  const DegradationModel& model() const { return model_; }

  Image apply(const Image& x) const;
  Image adjoint(const Image& r) const;

 private:
  DegradationModel model_;
  Size2 hr_;
  Size2 lr_;
  ResampleMatrix rows_;
  ResampleMatrix cols_;
};

/// D(x); with `noisy` set, adds i.i.d. N(0, noise_sigma^2) drawn from `rng`
/// (required in that case).
Image degrade(const Image& x, const DegradationModel& model, bool noisy = false,
              std::mt19937_64* rng = nullptr);

/// D^T r onto an out_h x out_w grid.
Image degrade_adjoint(const Image& r, const DegradationModel& model, int out_h,
                      int out_w);

}  // namespace batdiff
