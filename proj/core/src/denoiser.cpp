#include "batdiff/denoiser.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <utility>
#include <string>

#include "batdiff/error.hpp"

namespace batdiff {
namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using Vec = Eigen::VectorXd;
using VecMap = Eigen::Map<Vec>;
using ConstVecMap = Eigen::Map<const Vec>;

// Canonical tensor slots.
constexpr std::size_t kScaleTable = 0;
constexpr std::size_t kFc1Weight = 1;
constexpr std::size_t kFc1Bias = 2;
constexpr std::size_t kFc2Weight = 3;
constexpr std::size_t kFc2Bias = 4;
constexpr std::size_t kStemWeight = 5;
constexpr std::size_t kStemBias = 6;
constexpr std::size_t kFirstBlock = 7;
constexpr std::size_t kBlockStride = 4;

std::size_t head_slot(const DenoiserConfig& c) {
  return kFirstBlock + kBlockStride * static_cast<std::size_t>(c.blocks);
}

struct Geometry {
  int batch;
  int height;
  int width;
  ConvPadding padding;

  Eigen::Index pixels() const { return static_cast<Eigen::Index>(height) * width; }
  Eigen::Index columns() const { return pixels() * batch; }
};

int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

// Rows ordered (channel, ky, kx) to match weight layout [out, in, 3, 3].
Mat im2col(const Mat& in, const Geometry& g) {
  const auto cin = in.rows();
  const int h = g.height;
  const int w = g.width;
  Mat cols(cin * 9, g.columns());
  for (Eigen::Index ci = 0; ci < cin; ++ci) {
    const double* src_plane = in.row(ci).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int dy = ky - 1;
        const int dx = kx - 1;
        double* dst_row = cols.row(ci * 9 + ky * 3 + kx).data();
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(w, w - dx);
        for (int n = 0; n < g.batch; ++n) {
          for (int y = 0; y < h; ++y) {
            double* dst = dst_row + (static_cast<Eigen::Index>(n) * h + y) * w;
            int sy = y + dy;
            if (sy < 0 || sy >= h) {
              if (g.padding == ConvPadding::kZero) {
                std::fill(dst, dst + w, 0.0);
                continue;
              }
              sy = wrap(sy, h);
            }
            const double* src = src_plane + (static_cast<Eigen::Index>(n) * h + sy) * w;
            for (int x = 0; x < x_lo; ++x) {
              dst[x] = g.padding == ConvPadding::kZero ? 0.0 : src[wrap(x + dx, w)];
            }
            for (int x = x_lo; x < x_hi; ++x) dst[x] = src[x + dx];
            for (int x = std::max(x_hi, x_lo); x < w; ++x) {
              dst[x] = g.padding == ConvPadding::kZero ? 0.0 : src[wrap(x + dx, w)];
            }
          }
        }
      }
    }
  }
  return cols;
}

// Transpose of im2col.
Mat col2im(const Mat& cols, Eigen::Index cin, const Geometry& g) {
  const int h = g.height;
  const int w = g.width;
  Mat out = Mat::Zero(cin, g.columns());
  for (Eigen::Index ci = 0; ci < cin; ++ci) {
    double* dst_plane = out.row(ci).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int dy = ky - 1;
        const int dx = kx - 1;
        const double* src_row = cols.row(ci * 9 + ky * 3 + kx).data();
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(w, w - dx);
        for (int n = 0; n < g.batch; ++n) {
          for (int y = 0; y < h; ++y) {
            const double* src = src_row + (static_cast<Eigen::Index>(n) * h + y) * w;
            int sy = y + dy;
            if (sy < 0 || sy >= h) {
              if (g.padding == ConvPadding::kZero) continue;
              sy = wrap(sy, h);
            }
            double* dst = dst_plane + (static_cast<Eigen::Index>(n) * h + sy) * w;
            if (g.padding == ConvPadding::kPeriodic) {
              for (int x = 0; x < x_lo; ++x) dst[wrap(x + dx, w)] += src[x];
              for (int x = std::max(x_hi, x_lo); x < w; ++x) dst[wrap(x + dx, w)] += src[x];
            }
            for (int x = x_lo; x < x_hi; ++x) dst[x + dx] += src[x];
          }
        }
      }
    }
  }
  return out;
}

Mat silu(const Mat& z) { return (z.array() / (1.0 + (-z.array()).exp())).matrix(); }

Mat silu_grad(const Mat& z) {
  const auto s = 1.0 / (1.0 + (-z.array()).exp());
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

Vec silu(const Vec& z) { return (z.array() / (1.0 + (-z.array()).exp())).matrix(); }

Vec silu_grad(const Vec& z) {
  const auto s = 1.0 / (1.0 + (-z.array()).exp());
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

ConstMatMap weight_map(const Tensor& t) {
  const auto rows = static_cast<Eigen::Index>(t.shape[0]);
  return ConstMatMap(t.values.data(), rows, static_cast<Eigen::Index>(t.size()) / rows);
}

MatMap weight_map(Tensor& t) {
  const auto rows = static_cast<Eigen::Index>(t.shape[0]);
  return MatMap(t.values.data(), rows, static_cast<Eigen::Index>(t.size()) / rows);
}

ConstVecMap vec_map(const Tensor& t) {
  return ConstVecMap(t.values.data(), static_cast<Eigen::Index>(t.size()));
}

VecMap vec_map(Tensor& t) { return VecMap(t.values.data(), static_cast<Eigen::Index>(t.size())); }

Mat conv_forward(const Mat& in, const Tensor& weight, const Tensor& bias, const Geometry& g) {
  Mat out = weight_map(weight) * im2col(in, g);
  out.colwise() += vec_map(bias);
  return out;
}

// Accumulates weight/bias gradients; returns d(input) when requested.
void conv_backward(const Mat& in, const Mat& dout, const Tensor& weight, Tensor& dweight,
                   Tensor& dbias, const Geometry& g, Mat* din) {
  {
    const Mat cols = im2col(in, g);
    weight_map(dweight).noalias() += dout * cols.transpose();
  }
  vec_map(dbias) += dout.rowwise().sum();
  if (din != nullptr) {
    const Mat dcols = weight_map(weight).transpose() * dout;
    *din = col2im(dcols, in.rows(), g);
  }
}

struct EmbeddingCache {
  Vec u;
  Vec hidden_pre;
  Vec hidden;
};

struct ForwardCache {
  Geometry geom{};
  Mat input;
  std::vector<EmbeddingCache> embed;
  std::vector<Mat> block_in;
  std::vector<Mat> block_mid;  // conv1 pre-activation
  Mat final_act;
};

void validate_input(const DenoiserInput& in, const DenoiserConfig& c) {
  if (in.t < 1 || in.t > c.timesteps) {
    throw ArgumentError("timestep " + std::to_string(in.t) + " outside [1, " +
                        std::to_string(c.timesteps) + "]");
  }
  if (in.scale < 0 || in.scale > c.levels) {
    throw ArgumentError("scale index " + std::to_string(in.scale) + " outside [0, " +
                        std::to_string(c.levels) + "]");
  }
  if (in.x_t.channels() != c.channels) {
    throw ShapeError("denoiser expects " + std::to_string(c.channels) + " channels, got " +
                     std::to_string(in.x_t.channels()));
  }
  if (in.scale >= 1 && !in.parent) {
    throw ArgumentError("scale " + std::to_string(in.scale) + " requires a parent state");
  }
  if (in.scale == 0 && in.parent) {
    throw ArgumentError("scale 0 takes no parent state");
  }
  if (in.parent) require_same_shape(in.x_t, *in.parent, "denoiser parent");
}

Mat forward(std::span<const DenoiserInput> inputs, const DenoiserParams& params,
            ForwardCache* cache) {
  const DenoiserConfig& c = params.config;
  const ParamSet& p = params.weights;
  if (inputs.empty()) throw ArgumentError("empty denoiser batch");
  for (const auto& in : inputs) {
    validate_input(in, c);
    require_same_shape(in.x_t, inputs.front().x_t, "denoiser batch");
  }
  const Geometry g{static_cast<int>(inputs.size()), inputs.front().x_t.height(),
                   inputs.front().x_t.width(), c.padding};
  const Eigen::Index pixels = g.pixels();
  const int ch = c.channels;

  Mat x = Mat::Zero(2 * ch, g.columns());
  for (int n = 0; n < g.batch; ++n) {
    const auto& in = inputs[static_cast<std::size_t>(n)];
    for (int k = 0; k < ch; ++k) {
      auto src = in.x_t.plane(k);
      std::copy(src.begin(), src.end(), x.row(k).data() + n * pixels);
      if (in.parent) {
        auto par = in.parent->plane(k);
        std::copy(par.begin(), par.end(), x.row(ch + k).data() + n * pixels);
      }
    }
  }

  Mat a = conv_forward(x, p[kStemWeight], p[kStemBias], g);
  const auto scale_table = weight_map(p[kScaleTable]);
  for (int n = 0; n < g.batch; ++n) {
    const auto& in = inputs[static_cast<std::size_t>(n)];
    const std::vector<double> te = time_embedding(in.t, c.timesteps, c.embed_dim);
    EmbeddingCache e;
    e.u = ConstVecMap(te.data(), c.embed_dim) + scale_table.row(in.scale).transpose();
    e.hidden_pre = weight_map(p[kFc1Weight]) * e.u + vec_map(p[kFc1Bias]);
    e.hidden = silu(e.hidden_pre);
    const Vec v = weight_map(p[kFc2Weight]) * e.hidden + vec_map(p[kFc2Bias]);
    a.middleCols(n * pixels, pixels).colwise() += v;
    if (cache != nullptr) cache->embed.push_back(std::move(e));
  }

  for (int b = 0; b < c.blocks; ++b) {
    const std::size_t slot = kFirstBlock + kBlockStride * static_cast<std::size_t>(b);
    Mat mid = conv_forward(silu(a), p[slot], p[slot + 1], g);
    Mat delta = conv_forward(silu(mid), p[slot + 2], p[slot + 3], g);
    if (cache != nullptr) {
      cache->block_in.push_back(a);
      cache->block_mid.push_back(std::move(mid));
    }
    a += delta;
  }
  const std::size_t head = head_slot(c);
  Mat out = conv_forward(silu(a), p[head], p[head + 1], g);
  if (cache != nullptr) {
    cache->geom = g;
    cache->input = std::move(x);
    cache->final_act = std::move(a);
  }
  return out;
}

std::vector<Image> split_output(const Mat& out, const Geometry& g, int channels) {
  std::vector<Image> images;
  images.reserve(static_cast<std::size_t>(g.batch));
  const Eigen::Index pixels = g.pixels();
  for (int n = 0; n < g.batch; ++n) {
    Image img(g.height, g.width, channels);
    for (int k = 0; k < channels; ++k) {
      const double* src = out.row(k).data() + n * pixels;
      std::copy(src, src + pixels, img.plane(k).data());
    }
    images.push_back(std::move(img));
  }
  return images;
}

}  // namespace

void DenoiserConfig::validate() const {
  if (channels < 1) throw ArgumentError("denoiser channels must be >= 1");
  if (features < 1) throw ArgumentError("denoiser features must be >= 1");
  if (blocks < 0) throw ArgumentError("denoiser blocks must be >= 0");
  if (embed_dim < 2 || embed_dim % 2 != 0) {
    throw ArgumentError("embedding dimension must be even and >= 2");
  }
  if (levels < 0) throw ArgumentError("denoiser levels must be >= 0");
  if (timesteps < 1) throw ArgumentError("denoiser timesteps must be >= 1");
}

ParamSet denoiser_layout(const DenoiserConfig& c) {
  c.validate();
  const int f = c.features;
  std::vector<Tensor> t;
  t.emplace_back("embed.scale", std::vector<int>{c.levels + 1, c.embed_dim});
  t.emplace_back("embed.fc1.weight", std::vector<int>{f, c.embed_dim});
  t.emplace_back("embed.fc1.bias", std::vector<int>{f});
  t.emplace_back("embed.fc2.weight", std::vector<int>{f, f});
  t.emplace_back("embed.fc2.bias", std::vector<int>{f});
  t.emplace_back("stem.weight", std::vector<int>{f, 2 * c.channels, 3, 3});
  t.emplace_back("stem.bias", std::vector<int>{f});
  for (int b = 0; b < c.blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    t.emplace_back(prefix + ".conv1.weight", std::vector<int>{f, f, 3, 3});
    t.emplace_back(prefix + ".conv1.bias", std::vector<int>{f});
    t.emplace_back(prefix + ".conv2.weight", std::vector<int>{f, f, 3, 3});
    t.emplace_back(prefix + ".conv2.bias", std::vector<int>{f});
  }
  t.emplace_back("head.weight", std::vector<int>{c.channels, f, 3, 3});
  t.emplace_back("head.bias", std::vector<int>{c.channels});
  return ParamSet(std::move(t));
}

DenoiserParams DenoiserParams::zeros(const DenoiserConfig& config) {
  return {config, denoiser_layout(config)};
}

DenoiserParams DenoiserParams::initialize(const DenoiserConfig& config, std::mt19937_64& rng) {
  DenoiserParams params = zeros(config);
  const std::size_t head = head_slot(config);
  for (std::size_t i = 0; i < params.weights.tensor_count(); ++i) {
    Tensor& t = params.weights[i];
    if (t.shape.size() < 2 || i == head) continue;  // biases and head stay zero
    double bound = 1.0;
    if (i != kScaleTable) {
      const std::size_t fan_in = t.size() / static_cast<std::size_t>(t.shape[0]);
      bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    }
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.values) v = dist(rng);
  }
  return params;
}

std::vector<double> time_embedding(int t, int timesteps, int dim) {
  const int half = dim / 2;
  const double pos = 1000.0 * static_cast<double>(t) / static_cast<double>(timesteps);
  std::vector<double> e(static_cast<std::size_t>(dim));
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    e[static_cast<std::size_t>(k)] = std::sin(pos * freq);
    e[static_cast<std::size_t>(k + half)] = std::cos(pos * freq);
  }
  return e;
}

Image predict_noise(const DenoiserInput& input, const DenoiserParams& params) {
  return predict_noise_batch(std::span<const DenoiserInput>(&input, 1), params).front();
}

std::vector<Image> predict_noise_batch(std::span<const DenoiserInput> inputs,
                                       const DenoiserParams& params) {
  const Mat out = forward(inputs, params, nullptr);
  const Geometry g{static_cast<int>(inputs.size()), inputs.front().x_t.height(),
                   inputs.front().x_t.width(), params.config.padding};
  return split_output(out, g, params.config.channels);
}

LossAndGrad loss_and_grad(std::span<const TrainingSample> batch, const DenoiserParams& params) {
  if (batch.empty()) throw ArgumentError("loss_and_grad needs a non-empty batch");
  std::vector<DenoiserInput> inputs;
  inputs.reserve(batch.size());
  for (const auto& sample : batch) {
    require_same_shape(sample.input.x_t, sample.target, "training target");
    inputs.push_back(sample.input);
  }
  const DenoiserConfig& c = params.config;
  const ParamSet& p = params.weights;
  ForwardCache cache;
  const Mat out = forward(inputs, params, &cache);
  const Geometry& g = cache.geom;
  const Eigen::Index pixels = g.pixels();

  Mat diff = out;
  for (int n = 0; n < g.batch; ++n) {
    const Image& target = batch[static_cast<std::size_t>(n)].target;
    for (int k = 0; k < c.channels; ++k) {
      diff.row(k).segment(n * pixels, pixels) -=
          ConstVecMap(target.plane(k).data(), pixels).transpose();
    }
  }
  const double count = static_cast<double>(diff.size());
  LossAndGrad result;
  result.loss = diff.squaredNorm() / count;
  result.grads = p.zeros_like();
  ParamSet& d = result.grads;

  const Mat dout = diff * (2.0 / count);
  const std::size_t head = head_slot(c);
  Mat dact;
  conv_backward(silu(cache.final_act), dout, p[head], d[head], d[head + 1], g, &dact);
  Mat da = dact.cwiseProduct(silu_grad(cache.final_act));

  for (int b = c.blocks - 1; b >= 0; --b) {
    const std::size_t slot = kFirstBlock + kBlockStride * static_cast<std::size_t>(b);
    const Mat& a_in = cache.block_in[static_cast<std::size_t>(b)];
    const Mat& mid = cache.block_mid[static_cast<std::size_t>(b)];
    Mat dmid_act;
    conv_backward(silu(mid), da, p[slot + 2], d[slot + 2], d[slot + 3], g, &dmid_act);
    const Mat dmid = dmid_act.cwiseProduct(silu_grad(mid));
    Mat din_act;
    conv_backward(silu(a_in), dmid, p[slot], d[slot], d[slot + 1], g, &din_act);
    da += din_act.cwiseProduct(silu_grad(a_in));
  }

  conv_backward(cache.input, da, p[kStemWeight], d[kStemWeight], d[kStemBias], g, nullptr);

  auto dscale = weight_map(d[kScaleTable]);
  const auto w1 = weight_map(p[kFc1Weight]);
  const auto w2 = weight_map(p[kFc2Weight]);
  for (int n = 0; n < g.batch; ++n) {
    const EmbeddingCache& e = cache.embed[static_cast<std::size_t>(n)];
    const Vec dv = da.middleCols(n * pixels, pixels).rowwise().sum();
    weight_map(d[kFc2Weight]).noalias() += dv * e.hidden.transpose();
    vec_map(d[kFc2Bias]) += dv;
    const Vec dhidden = (w2.transpose() * dv).cwiseProduct(silu_grad(e.hidden_pre));
    weight_map(d[kFc1Weight]).noalias() += dhidden * e.u.transpose();
    vec_map(d[kFc1Bias]) += dhidden;
    dscale.row(inputs[static_cast<std::size_t>(n)].scale) += (w1.transpose() * dhidden).transpose();
  }
  return result;
}

const DenoiserParams& DenoiserBank::for_scale(int s) const {
  if (nets.empty()) throw ArgumentError("empty denoiser bank");
  if (shared()) return nets.front();
  if (s < 0 || static_cast<std::size_t>(s) >= nets.size()) {
    throw ArgumentError("no denoiser for scale " + std::to_string(s));
  }
  return nets[static_cast<std::size_t>(s)];
}

DenoiserParams& DenoiserBank::for_scale(int s) {
  return const_cast<DenoiserParams&>(std::as_const(*this).for_scale(s));
}

}  // namespace batdiff
