#pragma once

#include <vector>

#include "mudikit/latent.hpp"

namespace mudikit {

enum class ScheduleKind { cosine, linear };

/// Discrete variance-preserving schedule. alpha_bar[0] = 1, strictly
/// decreasing, alpha_bar[T] <= 1e-4.
class NoiseSchedule {
 public:
  NoiseSchedule(std::vector<double> alpha_bar);

  int steps() const noexcept { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const { return alpha_bar_.at(t); }
  /// Signal coefficient sqrt(alpha_bar[t]).
  double alpha(int t) const;
  /// Noise coefficient sqrt(1 - alpha_bar[t]).
  double sigma(int t) const;
  const std::vector<double>& alpha_bars() const noexcept { return alpha_bar_; }

 private:
  std::vector<double> alpha_bar_;
};

/// Cosine: alpha_bar[t] = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2), s = 0.008.
/// Linear: beta rises linearly from 0.1/T to min(20/T, 0.9999);
/// alpha_bar[t] = prod_{i<=t} (1 - beta_i).
NoiseSchedule make_schedule(int steps, ScheduleKind kind = ScheduleKind::cosine);

/// The per-step betas of the linear schedule, exposed for checking.
std::vector<double> linear_betas(int steps);

/// alpha_t * x0 + sigma_t * eps, elementwise.
LatentGrid forward_noise(const LatentGrid& x0, int t, const LatentGrid& eps,
                         const NoiseSchedule& schedule);

}  // namespace mudikit
