#include "batdiff/wavelet.hpp"

#include <algorithm>
#include <string>

#include "batdiff/error.hpp"
#include "batdiff/image_io.hpp"

namespace batdiff {

void WaveletConfig::validate() const {
  if (levels < 1) throw ArgumentError("wavelet levels must be >= 1");
  if (!(detail_gain > 0.0)) throw ArgumentError("detail gain must be > 0");
}

std::vector<double> dilated_b3_kernel(int level) {
  if (level < 1) throw ArgumentError("a trous level must be >= 1");
  static constexpr double kBase[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const std::size_t step = std::size_t{1} << (level - 1);
  std::vector<double> k(4 * step + 1, 0.0);
  for (std::size_t i = 0; i < 5; ++i) k[i * step] = kBase[i];
  return k;
}

Image convolve_separable(const Image& img, const std::vector<double>& kernel,
                         Boundary boundary) {
  const int radius = static_cast<int>(kernel.size() / 2);
  // Only nonzero taps matter; dilated kernels are mostly holes.
  std::vector<std::pair<int, double>> taps;
  for (int k = -radius; k <= radius; ++k) {
    const double w = kernel[static_cast<std::size_t>(k + radius)];
    if (w != 0.0) taps.emplace_back(k, w);
  }
  const int h = img.height();
  const int w = img.width();
  Image tmp(h, w, img.channels());
  Image out(h, w, img.channels());
  std::vector<int> idx(taps.size());
  for (int c = 0; c < img.channels(); ++c) {
    auto src = img.plane(c);
    auto mid = tmp.plane(c);
    auto dst = out.plane(c);
    for (int y = 0; y < h; ++y) {
      const double* row = &src[static_cast<std::size_t>(y) * static_cast<std::size_t>(w)];
      double* trow = &mid[static_cast<std::size_t>(y) * static_cast<std::size_t>(w)];
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (auto [k, wt] : taps) acc += wt * row[fold_index(x + k, w, boundary)];
        trow[x] = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (std::size_t i = 0; i < taps.size(); ++i) {
        idx[i] = fold_index(y + taps[i].first, h, boundary);
      }
      double* drow = &dst[static_cast<std::size_t>(y) * static_cast<std::size_t>(w)];
      std::fill(drow, drow + w, 0.0);
      for (std::size_t i = 0; i < taps.size(); ++i) {
        const double* trow = &mid[static_cast<std::size_t>(idx[i]) * static_cast<std::size_t>(w)];
        const double wt = taps[i].second;
        for (int x = 0; x < w; ++x) drow[x] += wt * trow[x];
      }
    }
  }
  return out;
}

AtrousPyramid atrous_decompose(const Image& x_ref, int levels, Boundary boundary) {
  if (levels < 1) throw ArgumentError("a trous decomposition needs at least one level");
  AtrousPyramid p;
  p.smooth.reserve(static_cast<std::size_t>(levels) + 1);
  p.details.reserve(static_cast<std::size_t>(levels));
  p.smooth.push_back(x_ref);
  for (int s = 1; s <= levels; ++s) {
    p.smooth.push_back(convolve_separable(p.smooth.back(), dilated_b3_kernel(s), boundary));
    const auto n = p.smooth.size();
    p.details.push_back(p.smooth[n - 2] - p.smooth[n - 1]);
  }
  return p;
}

Image reconstruct(const AtrousPyramid& p) {
  Image out = p.coarsest();
  // Finest first so the partial sums telescope back onto smooth[0].
  for (int s = p.levels(); s >= 1; --s) out += p.detail(s);
  return out;
}

std::vector<Image> partial_targets(const AtrousPyramid& p, double detail_gain) {
  if (!(detail_gain > 0.0)) throw ArgumentError("detail gain must be > 0");
  std::vector<Image> targets;
  targets.reserve(static_cast<std::size_t>(p.levels()) + 1);
  targets.push_back(p.coarsest());
  for (int s = 1; s <= p.levels(); ++s) {
    Image next = targets.back();
    next.add_scaled(p.detail(s), detail_gain);
    targets.push_back(std::move(next));
  }
  return targets;
}

namespace {

Image stretch01(const Image& img) {
  auto data = img.data();
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  Image out = img;
  const double range = *hi - *lo;
  for (double& v : out.data()) v = range > 0.0 ? (v - *lo) / range : 0.5;
  return out;
}

}  // namespace

void dump_subbands(const AtrousPyramid& p, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_image(stretch01(p.coarsest()), dir / "coarse.png");
  for (int s = 1; s <= p.levels(); ++s) {
    save_image(stretch01(p.detail(s)), dir / ("detail_" + std::to_string(s) + ".png"));
  }
}

}  // namespace batdiff
