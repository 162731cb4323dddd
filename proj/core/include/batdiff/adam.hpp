#pragma once

#include "batdiff/params.hpp"

namespace batdiff {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ParamSet first_moment;
  ParamSet second_moment;
  long step = 0;

  static AdamState for_params(const ParamSet& params);
};

/// One bias-corrected Adam update. Throws NumericError on non-finite
/// gradients, leaving params and state untouched.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const AdamHyper& hp);

}  // namespace batdiff
