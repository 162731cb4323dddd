#pragma once

#include <random>
#include <vector>

#include "batdiff/image.hpp"

namespace batdiff {

enum class PosteriorStd {
  kPosterior,  // sigma_t = omega * sqrt(beta_tilde_t)
  kBeta,       // sigma_t = omega * sqrt(beta_t)
};

/// Linear-beta DDPM schedule. Timesteps are 1-based; the arrays are stored
/// 0-based, so element t-1 belongs to timestep t.
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int timesteps, double beta_start, double beta_end,
                              double omega, PosteriorStd std_mode = PosteriorStd::kPosterior);

  int timesteps() const { return static_cast<int>(beta_.size()); }
  double omega() const { return omega_; }
  double beta(int t) const { return beta_[slot(t)]; }
  double alpha(int t) const { return alpha_[slot(t)]; }
  /// alpha_bar(0) is 1 by convention.
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[slot(t)]; }
  double sigma(int t) const { return sigma_[slot(t)]; }

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alphas() const { return alpha_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }
  const std::vector<double>& sigmas() const { return sigma_; }

 private:
  std::size_t slot(int t) const;

  double omega_ = 0.0;
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<double> sigma_;
};

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Image forward_noise(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched);

/// (x_t - (1 - alpha_t) / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)
Image reverse_mean(const Image& x_t, const Image& eps_hat, int t, const NoiseSchedule& sched);

/// reverse_mean + sigma_t z. No draws are taken from `rng` when sigma_t is 0.
Image reverse_step(const Image& x_t, const Image& eps_hat, int t, const NoiseSchedule& sched,
                   std::mt19937_64& rng);

/// Image of i.i.d. N(0,1) samples.
Image gaussian_image(int height, int width, int channels, std::mt19937_64& rng);

}  // namespace batdiff
