#include "batdiff/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace batdiff {

Image checkerboard_stripes(int size, int cell, double stripe_period, double stripe_amplitude) {
  Image img(size, size, 1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool on = ((y / cell) + (x / cell)) % 2 == 0;
      const double stripes =
          stripe_amplitude * std::sin(2.0 * std::numbers::pi * (x + y) / stripe_period);
      img.at(0, y, x) = std::clamp((on ? 0.8 : 0.2) + stripes, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace batdiff
