#include "mudikit/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "mudikit/error.hpp"
#include "mudikit/kernels.hpp"

namespace mudikit {

std::vector<int> sampling_timesteps(int total_steps, int steps) {
  require(steps >= 1 && steps <= total_steps, ErrorCode::parameter,
          "sampling steps must lie in [1, T]");
  std::vector<int> ts;
  ts.reserve(steps);
  for (int i = steps; i >= 1; --i)
    ts.push_back(static_cast<int>(std::lround(static_cast<double>(total_steps) * i / steps)));
  return ts;
}

SampleResult sample_with(const X0Predictor& predict_x0, std::size_t dim,
                         const NoiseSchedule& schedule, std::span<const double> init, int steps,
                         RandomSource& rng, double eta) {
  require(eta >= 0.0 && eta <= 1.0, ErrorCode::parameter, "eta must lie in [0, 1]");
  SampleResult result;
  result.timesteps = sampling_timesteps(schedule.steps(), steps);
  std::vector<double> x(dim);
  if (init.empty()) {
    rng.fill_normal(x);
  } else {
    require(init.size() == dim, ErrorCode::contract, "initial latent dimension mismatch");
    x.assign(init.begin(), init.end());
  }

  std::vector<double> x0(dim), noise(dim);
  for (std::size_t i = 0; i < result.timesteps.size(); ++i) {
    const int t = result.timesteps[i];
    const int s = i + 1 < result.timesteps.size() ? result.timesteps[i + 1] : 0;
    const double abar_t = schedule.alpha_bar(t), abar_s = schedule.alpha_bar(s);
    const double sigma_t = schedule.sigma(t);
    require(sigma_t > 0.0, ErrorCode::schedule,
            "sigma_t = 0 at t = " + std::to_string(t) + " inside the reverse chain");

    predict_x0(x, t, x0);
    result.x0_trajectory.push_back(x0);

    // Generalized reverse step: eta = 1 is the ancestral posterior
    // q(x_s | x_t, x0), eta = 0 the deterministic DDIM update.
    const double var = eta * eta * (1.0 - abar_s) / (1.0 - abar_t) * (1.0 - abar_t / abar_s);
    const double c_xt = std::sqrt(std::max(0.0, 1.0 - abar_s - var)) / sigma_t;
    const double c_x0 = std::sqrt(abar_s) - c_xt * std::sqrt(abar_t);
    kernels::axpby(c_x0, x0, c_xt, x, x);
    if (s > 0 && var > 0.0) {
      rng.fill_normal(noise);
      kernels::axpy(std::sqrt(var), noise, x);
    }
  }
  result.latent = std::move(x);
  return result;
}

SampleResult sample(const GmmScoreModel& gmm, const NoiseSchedule& schedule,
                    const std::optional<LatentGrid>& init, int steps, RandomSource& rng,
                    double eta) {
  const X0Predictor predict = [&](std::span<const double> x_t, int t, std::span<double> out) {
    const auto m = gmm_posterior_mean(x_t, t, gmm, schedule);
    std::copy(m.begin(), m.end(), out.begin());
  };
  return sample_with(predict, gmm.dim(), schedule,
                     init ? init->values() : std::span<const double>{}, steps, rng, eta);
}

SampleResult sample(const DenoiserModel& model, int condition, const NoiseSchedule& schedule,
                    const std::optional<LatentGrid>& init, int steps, RandomSource& rng,
                    double eta) {
  std::vector<double> eps(model.dim());
  const X0Predictor predict = [&](std::span<const double> x_t, int t, std::span<double> out) {
    model.predict(x_t, t, condition, eps);
    kernels::axpby(1.0 / schedule.alpha(t), x_t, -schedule.sigma(t) / schedule.alpha(t), eps, out);
  };
  return sample_with(predict, model.dim(), schedule,
                     init ? init->values() : std::span<const double>{}, steps, rng, eta);
}

}  // namespace mudikit
