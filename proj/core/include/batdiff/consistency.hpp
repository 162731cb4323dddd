#pragma once

#include <random>

#include "batdiff/degradation.hpp"
#include "batdiff/image.hpp"

namespace batdiff {

/// ||D(x) - y||^2 (sum, not mean).
double lr_loss(const Image& x, const Image& y, const DegradationOperator& op);
double lr_loss(const Image& x, const Image& y, const DegradationModel& model);

/// 2 D^T (D(x) - y)
Image lr_loss_gradient(const Image& x, const Image& y, const DegradationOperator& op);

/// x - eta * grad ||D(x) - y||^2
Image lr_consistency_step(const Image& x, const Image& y, const DegradationOperator& op,
                          double eta);
Image lr_consistency_step(const Image& x, const Image& y, const DegradationModel& model,
                          double eta);

/// Largest eigenvalue of D^T D (= ||D||^2) by power iteration.
double operator_norm_squared(const DegradationOperator& op, int channels, int iterations,
                             std::mt19937_64& rng);

}  // namespace batdiff
