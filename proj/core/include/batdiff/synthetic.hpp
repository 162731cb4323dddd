#pragma once

#include "batdiff/image.hpp"

namespace batdiff {

/// Gray test pattern: checkerboard (cells of `cell` pixels, levels 0.2/0.8)
/// overlaid with diagonal sinusoidal stripes of the given period.
Image checkerboard_stripes(int size, int cell = 8, double stripe_period = 6.0,
                           double stripe_amplitude = 0.12);

}  // namespace batdiff
