#include "batdiff/schedule.hpp"

#include <cmath>
#include <string>

#include "batdiff/error.hpp"

namespace batdiff {

NoiseSchedule NoiseSchedule::linear(int timesteps, double beta_start, double beta_end,
                                    double omega, PosteriorStd std_mode) {
  if (timesteps < 1) throw ArgumentError("schedule needs at least one timestep");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw ArgumentError("schedule requires 0 < beta_start <= beta_end < 1");
  }
  if (!(omega >= 0.0)) throw ArgumentError("omega must be >= 0");

  NoiseSchedule s;
  s.omega_ = omega;
  const auto n = static_cast<std::size_t>(timesteps);
  s.beta_.resize(n);
  s.alpha_.resize(n);
  s.alpha_bar_.resize(n);
  s.sigma_.resize(n);
  double prev_bar = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = timesteps == 1 ? 0.0 : static_cast<double>(i) / (timesteps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    s.beta_[i] = beta;
    s.alpha_[i] = 1.0 - beta;
    s.alpha_bar_[i] = prev_bar * s.alpha_[i];
    const double var = std_mode == PosteriorStd::kPosterior
                           ? beta * (1.0 - prev_bar) / (1.0 - s.alpha_bar_[i])
                           : beta;
    s.sigma_[i] = omega * std::sqrt(var);
    prev_bar = s.alpha_bar_[i];
  }
  return s;
}

std::size_t NoiseSchedule::slot(int t) const {
  if (t < 1 || t > timesteps()) {
    throw ArgumentError("timestep " + std::to_string(t) + " outside [1, " +
                        std::to_string(timesteps()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

Image forward_noise(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched) {
  require_same_shape(x0, eps, "forward_noise");
  const double abar = sched.alpha_bar(t);
  const double a = std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  Image out = x0;
  auto o = out.data();
  auto e = eps.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * o[i] + b * e[i];
  return out;
}

Image reverse_mean(const Image& x_t, const Image& eps_hat, int t, const NoiseSchedule& sched) {
  require_same_shape(x_t, eps_hat, "reverse_mean");
  const double alpha = sched.alpha(t);
  const double coef = (1.0 - alpha) / std::sqrt(1.0 - sched.alpha_bar(t));
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
  Image out = x_t;
  auto o = out.data();
  auto e = eps_hat.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = inv_sqrt_alpha * (o[i] - coef * e[i]);
  return out;
}

Image reverse_step(const Image& x_t, const Image& eps_hat, int t, const NoiseSchedule& sched,
                   std::mt19937_64& rng) {
  Image out = reverse_mean(x_t, eps_hat, t, sched);
  const double sigma = sched.sigma(t);
  if (sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out.data()) v += sigma * normal(rng);
  }
  return out;
}

Image gaussian_image(int height, int width, int channels, std::mt19937_64& rng) {
  Image img(height, width, channels);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : img.data()) v = normal(rng);
  return img;
}

}  // namespace batdiff
