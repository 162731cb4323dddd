#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "batdiff/image.hpp"
#include "batdiff/params.hpp"

namespace batdiff {

enum class ConvPadding {
  kZero,
  kPeriodic,
};

/// Architecture of the shared noise predictor: a 3x3 conv stem over
/// concat(x_t, parent), `blocks` residual blocks of two SiLU + 3x3 conv
/// layers, and a 3x3 conv head. The time and scale embeddings pass through
/// a two-layer MLP and are added to the stem output.
struct DenoiserConfig {
  int channels = 1;
  int features = 32;
  int blocks = 6;
  int embed_dim = 64;
  int levels = 6;      // S; the scale table has S + 1 rows
  int timesteps = 100; // T; time embedding is over t / T
  ConvPadding padding = ConvPadding::kZero;

  void validate() const;
  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

struct DenoiserParams {
  DenoiserConfig config;
  ParamSet weights;

  /// Fan-in scaled uniform init, zero head so the initial prediction is 0.
  static DenoiserParams initialize(const DenoiserConfig& config, std::mt19937_64& rng);
  static DenoiserParams zeros(const DenoiserConfig& config);

  friend bool operator==(const DenoiserParams&, const DenoiserParams&) = default;
};

/// Tensor names and shapes in canonical order.
ParamSet denoiser_layout(const DenoiserConfig& config);

struct DenoiserInput {
  Image x_t;
  std::optional<Image> parent;  // present iff scale >= 1
  int t = 1;
  int scale = 0;
};

struct TrainingSample {
  DenoiserInput input;
  Image target;
};

struct LossAndGrad {
  double loss = 0.0;
  ParamSet grads;
};

/// Sinusoidal features of t / T, `dim` entries (sin half then cos half).
std::vector<double> time_embedding(int t, int timesteps, int dim);

Image predict_noise(const DenoiserInput& input, const DenoiserParams& params);

/// All inputs must share a shape; one forward pass over the whole batch.
std::vector<Image> predict_noise_batch(std::span<const DenoiserInput> inputs,
                                       const DenoiserParams& params);

/// Mean squared error over every element of the batch and its gradient
/// with respect to every parameter.
LossAndGrad loss_and_grad(std::span<const TrainingSample> batch, const DenoiserParams& params);

/// A set of S+1 scale-specific networks, or a single shared one.
struct DenoiserBank {
  std::vector<DenoiserParams> nets;

  bool shared() const { return nets.size() == 1; }
  const DenoiserConfig& config() const { return nets.front().config; }
  const DenoiserParams& for_scale(int s) const;
  DenoiserParams& for_scale(int s);

  friend bool operator==(const DenoiserBank&, const DenoiserBank&) = default;
};

}  // namespace batdiff
