#include "batdiff/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

#include "batdiff/error.hpp"

namespace batdiff {
namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow);
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable 'valid' filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& k) {
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h * ow));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) {
        acc += k[static_cast<std::size_t>(i)] * src[static_cast<std::size_t>(y * w + x + i)];
      }
      tmp[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) {
        acc += k[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>((y + i) * ow + x)];
      }
      out[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  }
  return out;
}

double ssim_plane(std::span<const double> a, std::span<const double> b, int h, int w) {
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto k = gaussian_window();
  const std::vector<double> va(a.begin(), a.end());
  const std::vector<double> vb(b.begin(), b.end());
  std::vector<double> aa(va.size()), bb(va.size()), ab(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = filter_valid(va, h, w, k);
  const auto mu_b = filter_valid(vb, h, w, k);
  const auto e_aa = filter_valid(aa, h, w, k);
  const auto e_bb = filter_valid(bb, h, w, k);
  const auto e_ab = filter_valid(ab, h, w, k);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  require_same_shape(a, b, "psnr");
  const auto da = a.data();
  const auto db = b.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(da.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kWindow || a.width() < kWindow) {
    throw ArgumentError("ssim needs images of at least 11x11");
  }
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    total += ssim_plane(a.plane(c), b.plane(c), a.height(), a.width());
  }
  return total / a.channels();
}

Image to_luma(const Image& rgb) {
  if (rgb.channels() == 1) return rgb;
  if (rgb.channels() != 3) throw ShapeError("luma conversion needs 1 or 3 channels");
  Image y(rgb.height(), rgb.width(), 1);
  auto r = rgb.plane(0);
  auto g = rgb.plane(1);
  auto b = rgb.plane(2);
  auto out = y.plane(0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (16.0 + 65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i]) / 255.0;
  }
  return y;
}

Image crop_border(const Image& img, int border) {
  if (border <= 0) return img;
  if (2 * border >= img.height() || 2 * border >= img.width()) {
    throw ArgumentError("crop border removes the whole image");
  }
  return crop(img, border, border, img.height() - 2 * border, img.width() - 2 * border);
}

MetricReport evaluate(const Image& estimate, const Image& ground_truth,
                      const MetricOptions& options) {
  require_same_shape(estimate, ground_truth, "evaluate");
  Image a = options.y_channel ? to_luma(estimate) : estimate;
  Image b = options.y_channel ? to_luma(ground_truth) : ground_truth;
  a = crop_border(a, options.crop_border);
  b = crop_border(b, options.crop_border);
  return {psnr(a, b), ssim(a, b)};
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_metrics_header(std::ostream& out) { out << "image,psnr,ssim\n"; }

void write_metrics_row(std::ostream& out, const std::string& image, const MetricReport& r) {
  out << image << "," << format_metric(r.psnr) << "," << format_metric(r.ssim) << "\n";
}

}  // namespace batdiff
