#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mudikit/denoiser.hpp"
#include "mudikit/gmm.hpp"
#include "mudikit/latent.hpp"
#include "mudikit/random.hpp"
#include "mudikit/schedule.hpp"

namespace mudikit {

struct SampleResult {
  std::vector<double> latent;
  /// x0 prediction at every reverse step, first step first.
  std::vector<std::vector<double>> x0_trajectory;
  /// Timesteps visited, matching x0_trajectory.
  std::vector<int> timesteps;
};

/// Writes E[x0 | x_t] into `out`.
using X0Predictor =
    std::function<void(std::span<const double> x_t, int t, std::span<double> out)>;

/// Visited timesteps: round(T * i / steps) for i = steps..1.
std::vector<int> sampling_timesteps(int total_steps, int steps);

/// Reverse diffusion from `init` (or N(0, I) drawn from `rng` when absent)
/// over `steps` evenly spaced timesteps, ending at t = 0. eta = 1 is the
/// ancestral sampler; eta = 0 the deterministic DDIM update (no noise draws);
/// values between interpolate the injected noise.
SampleResult sample_with(const X0Predictor& predict_x0, std::size_t dim,
                         const NoiseSchedule& schedule, std::span<const double> init, int steps,
                         RandomSource& rng, double eta = 1.0);

SampleResult sample(const GmmScoreModel& gmm, const NoiseSchedule& schedule,
                    const std::optional<LatentGrid>& init, int steps, RandomSource& rng,
                    double eta = 1.0);

/// Noise-predicting model; x0 = (x_t - sigma_t eps) / alpha_t.
SampleResult sample(const DenoiserModel& model, int condition, const NoiseSchedule& schedule,
                    const std::optional<LatentGrid>& init, int steps, RandomSource& rng,
                    double eta = 1.0);

}  // namespace mudikit
