#include "batdiff/degradation.hpp"

#include <cmath>
#include <string>

#include "batdiff/error.hpp"

namespace batdiff {
namespace {

constexpr double kExtentTolerance = 1e-9;

ResampleMatrix axis_map(const DegradationModel& model, int hr, int lr) {
  if (model.mode == DegradationMode::kBicubic) return ResampleMatrix::bicubic(hr, lr);
  return ResampleMatrix::blur_subsample(hr, lr, model.scale_factor, model.blur_sigma);
}

}  // namespace

void DegradationModel::validate() const {
  if (!(scale_factor > 1.0) || !std::isfinite(scale_factor)) {
    throw ArgumentError("scale_factor must be > 1, got " + std::to_string(scale_factor));
  }
  if (!(blur_sigma >= 0.0)) throw ArgumentError("blur_sigma must be >= 0");
  if (!(noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be >= 0");
}

int lr_extent(int hr_extent, double scale_factor) {
  return static_cast<int>(std::floor(hr_extent / scale_factor + kExtentTolerance));
}

int hr_extent(int lr_extent, double scale_factor) {
  return static_cast<int>(std::floor(lr_extent * scale_factor + kExtentTolerance));
}

Size2 lr_size(Size2 hr, double scale_factor) {
  return {lr_extent(hr.height, scale_factor), lr_extent(hr.width, scale_factor)};
}

Size2 hr_size(Size2 lr, double scale_factor) {
  return {hr_extent(lr.height, scale_factor), hr_extent(lr.width, scale_factor)};
}

DegradationOperator::DegradationOperator(const DegradationModel& model, Size2 hr)
    : model_(model),
      hr_(hr),
      lr_([&] {
        model.validate();
        const Size2 lr = lr_size(hr, model.scale_factor);
        if (lr.height < 1 || lr.width < 1) {
          throw ArgumentError("degradation output would be empty for " +
                              std::to_string(hr.height) + "x" + std::to_string(hr.width) +
                              " at factor " + std::to_string(model.scale_factor));
        }
        return lr;
      }()),
      rows_(axis_map(model, hr.height, lr_.height)),
      cols_(axis_map(model, hr.width, lr_.width)) {}

Image DegradationOperator::apply(const Image& x) const {
  if (x.size() != hr_) throw ShapeError("degrade: input does not match operator HR grid");
  return apply_separable(x, rows_, cols_);
}

Image DegradationOperator::adjoint(const Image& r) const {
  if (r.size() != lr_) {
    throw ShapeError("degrade_adjoint: residual is " + std::to_string(r.height()) + "x" +
                     std::to_string(r.width()) + ", expected " +
                     std::to_string(lr_.height) + "x" + std::to_string(lr_.width));
  }
  return apply_separable_transpose(r, rows_, cols_);
}

Image degrade(const Image& x, const DegradationModel& model, bool noisy,
              std::mt19937_64* rng) {
  Image y = DegradationOperator(model, x.size()).apply(x);
  if (noisy && model.noise_sigma > 0.0) {
    if (rng == nullptr) throw ArgumentError("degrade: noisy mode requires a generator");
    std::normal_distribution<double> normal(0.0, model.noise_sigma);
    for (double& v : y.data()) v += normal(*rng);
  }
  return y;
}

Image degrade_adjoint(const Image& r, const DegradationModel& model, int out_h,
                      int out_w) {
  return DegradationOperator(model, {out_h, out_w}).adjoint(r);
}

}  // namespace batdiff
