#pragma once

#include <filesystem>
#include <vector>

#include "batdiff/boundary.hpp"
#include "batdiff/image.hpp"

namespace batdiff {

struct WaveletConfig {
  int levels = 6;
  double detail_gain = 0.8;

  void validate() const;
};

/// Undecimated a trous decomposition: smooth[0] is the input, smooth[s] the
/// level-s low-pass, details[s-1] = smooth[s-1] - smooth[s]. Every plane has
/// the input's dimensions.
struct AtrousPyramid {
  std::vector<Image> smooth;
  std::vector<Image> details;

  int levels() const { return static_cast<int>(details.size()); }
  const Image& coarsest() const { return smooth.back(); }
  /// w^(s) for s in [1, levels].
  const Image& detail(int s) const { return details[static_cast<std::size_t>(s - 1)]; }
};

/// B3-spline taps (1,4,6,4,1)/16 with 2^(level-1)-1 zeros between taps.
std::vector<double> dilated_b3_kernel(int level);

/// Separable convolution of each channel with `kernel` (odd length,
/// centered) in both axes.
Image convolve_separable(const Image& img, const std::vector<double>& kernel,
                         Boundary boundary = Boundary::kMirror);

AtrousPyramid atrous_decompose(const Image& x_ref, int levels,
                               Boundary boundary = Boundary::kMirror);

/// c^(S) + sum_s w^(s).
Image reconstruct(const AtrousPyramid& p);

/// Diffusion targets: element 0 is c^(S); element s adds gain * (w^(1) + ... + w^(s)).
std::vector<Image> partial_targets(const AtrousPyramid& p, double detail_gain);

/// Writes coarse.png and detail_<s>.png, each affinely mapped to [0,1].
void dump_subbands(const AtrousPyramid& p, const std::filesystem::path& dir);

}  // namespace batdiff
