#include <algorithm>
#include <sstream>
#include <string>

#include "batdiff/consistency.hpp"
#include "batdiff/hash.hpp"
#include "batdiff/pipeline.hpp"
#include "batdiff/random.hpp"

namespace batdiff {
namespace {

void check_compatible(const DenoiserBank& bank, const SamplerConfig& cfg, const Image& y) {
  if (bank.nets.empty()) throw ArgumentError("sampler needs a trained denoiser");
  const DenoiserConfig& c = bank.config();
  if (c.levels != cfg.levels) {
    throw ArgumentError("checkpoint was trained with S=" + std::to_string(c.levels) +
                        " but the sampler is configured with S=" + std::to_string(cfg.levels));
  }
  if (c.timesteps != cfg.timesteps) {
    throw ArgumentError("checkpoint was trained with T=" + std::to_string(c.timesteps) +
                        " but the sampler is configured with T=" + std::to_string(cfg.timesteps));
  }
  if (c.channels != y.channels()) {
    throw ArgumentError("checkpoint expects " + std::to_string(c.channels) +
                        " channels, input has " + std::to_string(y.channels()));
  }
}

const Image& select_parent(const std::vector<Image>& trajectory, int t, ParentMode mode) {
  switch (mode) {
    case ParentMode::kTimeAligned:
      return trajectory[static_cast<std::size_t>(t)];
    case ParentMode::kMisaligned:
      return trajectory[static_cast<std::size_t>(std::max(t - 1, 1))];
    case ParentMode::kCoarseFinal:
      return trajectory.front();
    case ParentMode::kNone:
      break;
  }
  throw ArgumentError("parent mode has no trajectory state");
}

}  // namespace

SampleResult sample(const Image& y, const DenoiserBank& bank, const SamplerConfig& cfg,
                    const DegradationModel& model) {
  cfg.validate();
  check_compatible(bank, cfg, y);
  const NoiseSchedule sched = cfg.schedule();
  const Image x_ref = hr_reference(y, model);
  const DegradationOperator op(model, x_ref.size());
  const int levels = cfg.levels;
  const int steps = cfg.timesteps;
  const int h = x_ref.height();
  const int w = x_ref.width();
  const int channels = y.channels();

  AtrousPyramid pyramid;
  if (levels >= 1 && !cfg.detail_gain_train_only) pyramid = atrous_decompose(x_ref, levels);

  std::mt19937_64 rng = make_stream(cfg.seed, RandomStream::kSampler);
  SampleResult result;
  const Image zero_parent(h, w, channels, 0.0);

  // trajectory[t] holds x_t for t = 0..T at the current / previous scale.
  std::vector<Image> previous;
  std::vector<Image> current(static_cast<std::size_t>(steps) + 1);
  Image x = gaussian_image(h, w, channels, rng);
  result.initial_residual = lr_loss(x, y, op);

  for (int s = 0; s <= levels; ++s) {
    if (s > 0) {
      x = previous.front();
      if (!cfg.detail_gain_train_only) x.add_scaled(pyramid.detail(s), cfg.detail_gain);
    }
    const DenoiserParams& net = bank.for_scale(s);
    current[static_cast<std::size_t>(steps)] = x;
    result.trace.push_back({TraceEntry::Kind::kState, s, steps, image_hash(x)});
    for (int t = steps; t >= 1; --t) {
      DenoiserInput in;
      in.t = t;
      in.scale = s;
      in.x_t = x;
      if (s >= 1) {
        in.parent = cfg.bivariate() ? select_parent(previous, t, cfg.parent_mode) : zero_parent;
        result.trace.push_back({TraceEntry::Kind::kParent, s, t, image_hash(*in.parent)});
      }
      const Image eps_hat = predict_noise(in, net);
      x = reverse_step(x, eps_hat, t, sched, rng);
      x = lr_consistency_step(x, y, op, cfg.eta);
      const double residual = lr_loss(x, y, op);
      if (!x.all_finite() || !std::isfinite(residual)) {
        throw NumericError("non-finite sampler state at scale s=" + std::to_string(s) +
                           ", timestep t=" + std::to_string(t));
      }
      result.lr_residuals.push_back(residual);
      current[static_cast<std::size_t>(t - 1)] = x;
      result.trace.push_back({TraceEntry::Kind::kState, s, t - 1, image_hash(x)});
    }
    std::swap(previous, current);
    current.assign(static_cast<std::size_t>(steps) + 1, Image());
  }
  result.raw = previous.front();
  result.hr = clamp01(result.raw);
  return result;
}

MetricReport evaluate_estimate(const Image& estimate, const Image& ground_truth,
                               const MetricOptions& options) {
  return evaluate(estimate, ground_truth, options);
}

std::string format_trace(const std::vector<TraceEntry>& trace) {
  std::ostringstream out;
  for (const auto& e : trace) {
    out << (e.kind == TraceEntry::Kind::kState ? "state" : "parent") << " " << e.scale << " "
        << e.t << " " << hex64(e.hash) << "\n";
  }
  return out.str();
}

std::string to_string(ParentMode mode) {
  switch (mode) {
    case ParentMode::kTimeAligned:
      return "time-aligned";
    case ParentMode::kMisaligned:
      return "misaligned";
    case ParentMode::kCoarseFinal:
      return "coarse-final";
    case ParentMode::kNone:
      return "none";
  }
  return "unknown";
}

ParentMode parent_mode_from_string(const std::string& s) {
  if (s == "time-aligned") return ParentMode::kTimeAligned;
  if (s == "misaligned" || s == "misaligned-prev-t") return ParentMode::kMisaligned;
  if (s == "coarse-final") return ParentMode::kCoarseFinal;
  if (s == "none") return ParentMode::kNone;
  throw ArgumentError("unknown parent mode '" + s + "'");
}

}  // namespace batdiff
