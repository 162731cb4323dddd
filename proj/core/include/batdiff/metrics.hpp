#pragma once

#include <iosfwd>
#include <string>

#include "batdiff/image.hpp"

namespace batdiff {

struct MetricReport {
  double psnr = 0.0;  // dB; +infinity for identical inputs
  double ssim = 0.0;
};

struct MetricOptions {
  bool y_channel = false;  // evaluate BT.601 luma instead of RGB
  int crop_border = 0;
};

/// 10 log10(peak^2 / MSE) over all pixels and channels.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1, mean over valid windows, averaged over
/// channels.
double ssim(const Image& a, const Image& b);

/// BT.601 studio-range luma of an RGB image in [0,1]; gray images pass through.
Image to_luma(const Image& rgb);

Image crop_border(const Image& img, int border);

MetricReport evaluate(const Image& estimate, const Image& ground_truth,
                      const MetricOptions& options = {});

/// CSV emission of per-image metric rows.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const std::string& image, const MetricReport& r);
std::string format_metric(double v);

}  // namespace batdiff
