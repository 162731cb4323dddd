#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "batdiff/degradation.hpp"
#include "batdiff/denoiser.hpp"
#include "batdiff/error.hpp"
#include "batdiff/image.hpp"
#include "batdiff/metrics.hpp"
#include "batdiff/schedule.hpp"
#include "batdiff/wavelet.hpp"

namespace batdiff {

/// Which coarse-scale state conditions the denoiser at scale s >= 1.
enum class ParentMode {
  kTimeAligned,  // x^(s-1)_t
  kMisaligned,   // x^(s-1)_(t-1), index clamped at 1
  kCoarseFinal,  // x^(s-1)_0
  kNone,         // zero parent block (univariate)
};

/// Noise pairing between a training state and its parent.
enum class NoiseCoupling {
  kShared,
  kIndependent,
};

struct SamplerConfig {
  int levels = 6;  // S; 0 disables the wavelet hierarchy
  int timesteps = 100;
  double omega = 0.3;
  double detail_gain = 0.8;
  double eta = 0.3;
  ParentMode parent_mode = ParentMode::kTimeAligned;
  std::uint64_t seed = 0;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  PosteriorStd posterior_std = PosteriorStd::kPosterior;
  /// Apply the detail gain to training targets only; hand-off between
  /// scales then passes x_0^(s-1) through unchanged.
  bool detail_gain_train_only = false;

  void validate() const;
  NoiseSchedule schedule() const;
  bool bivariate() const { return parent_mode != ParentMode::kNone; }
};

struct TrainConfig {
  long iterations = 120000;
  int batch = 16;
  int patch = 48;
  double lr = 1e-3;
  /// Iterations at which the learning rate is multiplied by lr_decay.
  /// Empty selects 50% and 80% of `iterations`.
  std::vector<long> lr_milestones;
  double lr_decay = 0.5;
  std::uint64_t seed = 0;
  NoiseCoupling coupling = NoiseCoupling::kShared;
  bool separate_networks = false;
  int features = 32;
  int blocks = 6;
  int embed_dim = 64;
  int log_every = 100;

  void validate() const;
  std::vector<long> resolved_milestones() const;
  double lr_at(long iteration) const;
};

struct LossPoint {
  long iteration = 0;  // last iteration in the window, 1-based
  double loss = 0.0;   // window mean
};

struct TrainResult {
  DenoiserBank bank;
  std::vector<LossPoint> loss_curve;
};

/// Thrown when training hits a non-finite loss; carries the last finite
/// parameters.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, DenoiserBank last_good, long iteration)
      : NumericError(what), last_good_(std::move(last_good)), iteration_(iteration) {}
  const DenoiserBank& last_good() const { return last_good_; }
  long iteration() const { return iteration_; }

 private:
  DenoiserBank last_good_;
  long iteration_;
};

using TrainProgress = std::function<void(const LossPoint&)>;

/// x_ref = bicubic upsampling of y onto the HR grid implied by the model.
Image hr_reference(const Image& y, const DegradationModel& model);

/// Clean per-scale targets x^(0)_0 .. x^(S)_0 (just x_ref when S = 0).
std::vector<Image> scale_targets(const Image& x_ref, int levels, double detail_gain);

TrainResult train(const Image& y, const DegradationModel& model, const TrainConfig& train_cfg,
                  const SamplerConfig& sampler_cfg, const TrainProgress& progress = {});

struct TraceEntry {
  enum class Kind { kState, kParent };
  Kind kind;
  int scale;
  int t;
  std::uint64_t hash;
};

struct SampleResult {
  Image hr;  // clamped to [0,1]
  Image raw; // x_0^(S) before clamping
  std::vector<TraceEntry> trace;
  /// ||D(x) - y||^2 right after each correction, in (s, t) order.
  std::vector<double> lr_residuals;
  double initial_residual = 0.0;
};

/// Coarse-to-fine bivariate reverse diffusion with LR-consistency.
SampleResult sample(const Image& y, const DenoiserBank& bank, const SamplerConfig& cfg,
                    const DegradationModel& model);

MetricReport evaluate_estimate(const Image& estimate, const Image& ground_truth,
                               const MetricOptions& options = {});

/// One line per trace entry: "<state|parent> <s> <t> <hash>".
std::string format_trace(const std::vector<TraceEntry>& trace);

std::string to_string(ParentMode mode);
ParentMode parent_mode_from_string(const std::string& s);

}  // namespace batdiff
