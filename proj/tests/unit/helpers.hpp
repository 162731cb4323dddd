#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "batdiff/image.hpp"

namespace batdiff::test {

inline Image random_image(int h, int w, int c, std::mt19937_64& rng, double lo = 0.0,
                          double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(h, w, c);
  for (double& v : img.data()) v = u(rng);
  return img;
}

inline double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.element_count(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

inline double max_abs(const Image& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

/// Reflect-101 index folding written out independently of the library.
inline int mirror(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

}  // namespace batdiff::test
