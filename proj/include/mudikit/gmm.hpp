#pragma once

#include <span>
#include <vector>

#include "mudikit/schedule.hpp"

namespace mudikit {

/// Isotropic Gaussian mixture sum_k w_k N(mu_k, tau^2 I), the sandbox's data
/// distribution. Its posterior mean E[x0 | x_t] is available in closed form,
/// so it serves as an exact denoiser.
class GmmScoreModel {
 public:
  GmmScoreModel(std::size_t dim, std::vector<double> means, std::vector<double> weights, double tau);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t components() const noexcept { return weights_.size(); }
  std::span<const double> mean(std::size_t k) const {
    return std::span<const double>(means_).subspan(k * dim_, dim_);
  }
  std::span<const double> weights() const noexcept { return weights_; }
  double tau() const noexcept { return tau_; }

 private:
  std::size_t dim_;
  std::vector<double> means_;
  std::vector<double> weights_;
  double tau_;
};

/// r_k proportional to w_k N(x_t; alpha_t mu_k, (alpha_t^2 tau^2 + sigma_t^2) I),
/// normalized with log-sum-exp.
std::vector<double> gmm_responsibilities(std::span<const double> x_t, int t,
                                         const GmmScoreModel& gmm, const NoiseSchedule& schedule);

/// E[x0 | x_t] = sum_k r_k (alpha_t tau^2 x_t + sigma_t^2 mu_k) / (alpha_t^2 tau^2 + sigma_t^2)
std::vector<double> gmm_posterior_mean(std::span<const double> x_t, int t,
                                       const GmmScoreModel& gmm, const NoiseSchedule& schedule);

/// Index of the mean closest to x in Euclidean distance (lowest index on ties).
std::size_t nearest_component(std::span<const double> x, const GmmScoreModel& gmm);

}  // namespace mudikit
