#include "batdiff/consistency.hpp"

#include <cmath>

#include "batdiff/error.hpp"
#include "batdiff/schedule.hpp"

namespace batdiff {

double lr_loss(const Image& x, const Image& y, const DegradationOperator& op) {
  Image r = op.apply(x);
  require_same_shape(r, y, "lr_loss");
  r -= y;
  return squared_norm(r);
}

double lr_loss(const Image& x, const Image& y, const DegradationModel& model) {
  return lr_loss(x, y, DegradationOperator(model, x.size()));
}

Image lr_loss_gradient(const Image& x, const Image& y, const DegradationOperator& op) {
  Image r = op.apply(x);
  require_same_shape(r, y, "lr_loss_gradient");
  r -= y;
  Image g = op.adjoint(r);
  g *= 2.0;
  return g;
}

Image lr_consistency_step(const Image& x, const Image& y, const DegradationOperator& op,
                          double eta) {
  if (!(eta >= 0.0)) throw ArgumentError("LR-consistency step size must be >= 0");
  if (eta == 0.0) return x;
  Image out = x;
  out.add_scaled(lr_loss_gradient(x, y, op), -eta);
  return out;
}

Image lr_consistency_step(const Image& x, const Image& y, const DegradationModel& model,
                          double eta) {
  return lr_consistency_step(x, y, DegradationOperator(model, x.size()), eta);
}

double operator_norm_squared(const DegradationOperator& op, int channels, int iterations,
                             std::mt19937_64& rng) {
  Image v = gaussian_image(op.hr().height, op.hr().width, channels, rng);
  v *= 1.0 / std::sqrt(squared_norm(v));
  double lambda = 0.0;
  for (int i = 0; i < iterations; ++i) {
    Image w = op.adjoint(op.apply(v));
    lambda = dot(v, w);
    const double n = std::sqrt(squared_norm(w));
    if (n == 0.0) return 0.0;
    v = std::move(w);
    v *= 1.0 / n;
  }
  return lambda;
}

}  // namespace batdiff
