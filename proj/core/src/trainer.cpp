#include <cmath>
#include <string>

#include "batdiff/adam.hpp"
#include "batdiff/pipeline.hpp"
#include "batdiff/random.hpp"
#include "batdiff/resample.hpp"

namespace batdiff {

void SamplerConfig::validate() const {
  if (levels < 0) throw ArgumentError("levels must be >= 0");
  if (timesteps < 1) throw ArgumentError("timesteps must be >= 1");
  if (!(omega >= 0.0)) throw ArgumentError("omega must be >= 0");
  if (!(detail_gain > 0.0)) throw ArgumentError("detail gain must be > 0");
  if (!(eta >= 0.0)) throw ArgumentError("eta must be >= 0");
}

NoiseSchedule SamplerConfig::schedule() const {
  return NoiseSchedule::linear(timesteps, beta_start, beta_end, omega, posterior_std);
}

void TrainConfig::validate() const {
  if (iterations < 0) throw ArgumentError("iterations must be >= 0");
  if (batch < 1) throw ArgumentError("batch must be >= 1");
  if (patch < 3) throw ArgumentError("patch must be >= 3");
  if (!(lr > 0.0)) throw ArgumentError("learning rate must be > 0");
  if (!(lr_decay > 0.0)) throw ArgumentError("lr_decay must be > 0");
  if (log_every < 1) throw ArgumentError("log_every must be >= 1");
}

std::vector<long> TrainConfig::resolved_milestones() const {
  if (!lr_milestones.empty()) return lr_milestones;
  return {iterations / 2, iterations * 4 / 5};
}

double TrainConfig::lr_at(long iteration) const {
  double rate = lr;
  for (long m : resolved_milestones()) {
    if (iteration >= m) rate *= lr_decay;
  }
  return rate;
}

Image hr_reference(const Image& y, const DegradationModel& model) {
  model.validate();
  const Size2 hr = hr_size(y.size(), model.scale_factor);
  return bicubic_resample(y, hr.height, hr.width);
}

std::vector<Image> scale_targets(const Image& x_ref, int levels, double detail_gain) {
  if (levels == 0) return {x_ref};
  return partial_targets(atrous_decompose(x_ref, levels), detail_gain);
}

namespace {

DenoiserConfig network_config(const TrainConfig& tc, const SamplerConfig& sc, int channels) {
  DenoiserConfig c;
  c.channels = channels;
  c.features = tc.features;
  c.blocks = tc.blocks;
  c.embed_dim = tc.embed_dim;
  c.levels = sc.levels;
  c.timesteps = sc.timesteps;
  return c;
}

}  // namespace

TrainResult train(const Image& y, const DegradationModel& model, const TrainConfig& train_cfg,
                  const SamplerConfig& sampler_cfg, const TrainProgress& progress) {
  train_cfg.validate();
  sampler_cfg.validate();
  const Image x_ref = hr_reference(y, model);
  if (train_cfg.patch > std::min(x_ref.height(), x_ref.width())) {
    throw ArgumentError("patch " + std::to_string(train_cfg.patch) +
                        " exceeds the HR reference size " + std::to_string(x_ref.height()) +
                        "x" + std::to_string(x_ref.width()));
  }
  const int levels = sampler_cfg.levels;
  const std::vector<Image> targets = scale_targets(x_ref, levels, sampler_cfg.detail_gain);
  const NoiseSchedule sched = sampler_cfg.schedule();

  std::mt19937_64 rng = make_stream(train_cfg.seed, RandomStream::kTrain);
  const DenoiserConfig net_cfg = network_config(train_cfg, sampler_cfg, y.channels());
  const std::size_t net_count =
      train_cfg.separate_networks ? static_cast<std::size_t>(levels) + 1 : 1;
  DenoiserBank bank;
  std::vector<AdamState> adam;
  for (std::size_t i = 0; i < net_count; ++i) {
    bank.nets.push_back(DenoiserParams::initialize(net_cfg, rng));
    adam.push_back(AdamState::for_params(bank.nets.back().weights));
  }

  std::uniform_int_distribution<int> scale_dist(0, levels);
  std::uniform_int_distribution<int> time_dist(1, sampler_cfg.timesteps);
  std::uniform_int_distribution<int> row_dist(0, x_ref.height() - train_cfg.patch);
  std::uniform_int_distribution<int> col_dist(0, x_ref.width() - train_cfg.patch);
  const int patch = train_cfg.patch;
  const int channels = y.channels();

  TrainResult result;
  DenoiserBank last_good = bank;
  double window_sum = 0.0;
  int window_count = 0;
  std::vector<TrainingSample> batch;
  batch.reserve(static_cast<std::size_t>(train_cfg.batch));

  for (long it = 0; it < train_cfg.iterations; ++it) {
    const int shared_scale = train_cfg.separate_networks ? scale_dist(rng) : -1;
    batch.clear();
    for (int b = 0; b < train_cfg.batch; ++b) {
      const int s = shared_scale >= 0 ? shared_scale : scale_dist(rng);
      const int t = time_dist(rng);
      const int y0 = row_dist(rng);
      const int x0 = col_dist(rng);
      Image eps = gaussian_image(patch, patch, channels, rng);
      TrainingSample sample;
      sample.input.t = t;
      sample.input.scale = s;
      sample.input.x_t =
          forward_noise(crop(targets[static_cast<std::size_t>(s)], y0, x0, patch, patch), t, eps,
                        sched);
      if (s >= 1) {
        if (sampler_cfg.bivariate()) {
          const Image parent_clean =
              crop(targets[static_cast<std::size_t>(s - 1)], y0, x0, patch, patch);
          const Image parent_eps = train_cfg.coupling == NoiseCoupling::kShared
                                       ? eps
                                       : gaussian_image(patch, patch, channels, rng);
          sample.input.parent = forward_noise(parent_clean, t, parent_eps, sched);
        } else {
          sample.input.parent = Image(patch, patch, channels, 0.0);
        }
      }
      sample.target = std::move(eps);
      batch.push_back(std::move(sample));
    }

    const std::size_t net_index =
        train_cfg.separate_networks ? static_cast<std::size_t>(shared_scale) : 0;
    DenoiserParams& net = bank.nets[net_index];
    LossAndGrad lg = loss_and_grad(batch, net);
    if (!std::isfinite(lg.loss)) {
      throw TrainingAborted("non-finite training loss at iteration " + std::to_string(it + 1),
                            std::move(last_good), it + 1);
    }
    AdamHyper hp;
    hp.lr = train_cfg.lr_at(it);
    try {
      adam_step(net.weights, lg.grads, adam[net_index], hp);
    } catch (const NumericError& e) {
      throw TrainingAborted(e.what(), std::move(last_good), it + 1);
    }

    window_sum += lg.loss;
    ++window_count;
    const bool window_done = (it + 1) % train_cfg.log_every == 0 || it + 1 == train_cfg.iterations;
    if (window_done) {
      LossPoint point{it + 1, window_sum / window_count};
      result.loss_curve.push_back(point);
      if (progress) progress(point);
      window_sum = 0.0;
      window_count = 0;
      last_good = bank;
    }
  }
  result.bank = std::move(bank);
  return result;
}

}  // namespace batdiff
