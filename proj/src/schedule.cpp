#include "mudikit/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mudikit/error.hpp"
#include "mudikit/kernels.hpp"

namespace mudikit {

LatentGrid::LatentGrid(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  require(height > 0 && width > 0 && channels > 0, ErrorCode::parameter,
          "latent dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

LatentGrid::LatentGrid(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  require(height > 0 && width > 0 && channels > 0, ErrorCode::parameter,
          "latent dimensions must be positive");
  require(data_.size() == static_cast<std::size_t>(height) * width * channels,
          ErrorCode::contract, "latent data length does not match dimensions");
  for (double v : data_) require(std::isfinite(v), ErrorCode::non_finite, "non-finite latent value");
}

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
  require(alpha_bar_.size() >= 3, ErrorCode::parameter, "schedule needs T >= 2");
  require(alpha_bar_[0] == 1.0, ErrorCode::schedule, "alpha_bar[0] must equal 1");
  for (std::size_t t = 1; t < alpha_bar_.size(); ++t)
    require(alpha_bar_[t] > 0.0 && alpha_bar_[t] < alpha_bar_[t - 1], ErrorCode::schedule,
            "alpha_bar must be positive and strictly decreasing");
  require(alpha_bar_.back() <= 1e-4, ErrorCode::schedule, "alpha_bar[T] must be <= 1e-4");
}

double NoiseSchedule::alpha(int t) const { return std::sqrt(alpha_bar(t)); }
double NoiseSchedule::sigma(int t) const { return std::sqrt(1.0 - alpha_bar(t)); }

std::vector<double> linear_betas(int steps) {
  require(steps >= 2, ErrorCode::parameter, "schedule needs T >= 2");
  const double first = 0.1 / steps;
  const double last = std::min(20.0 / steps, 0.9999);
  std::vector<double> betas(steps + 1, 0.0);
  for (int t = 1; t <= steps; ++t)
    betas[t] = first + (last - first) * (t - 1) / static_cast<double>(steps - 1);
  return betas;
}

NoiseSchedule make_schedule(int steps, ScheduleKind kind) {
  require(steps >= 2, ErrorCode::parameter, "schedule needs T >= 2");
  std::vector<double> alpha_bar(steps + 1, 1.0);
  if (kind == ScheduleKind::cosine) {
    constexpr double s = 0.008;
    auto f = [&](int t) {
      const double c = std::cos((static_cast<double>(t) / steps + s) / (1.0 + s) *
                                std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0);
    for (int t = 1; t <= steps; ++t) alpha_bar[t] = f(t) / f0;
  } else {
    const auto betas = linear_betas(steps);
    for (int t = 1; t <= steps; ++t) alpha_bar[t] = alpha_bar[t - 1] * (1.0 - betas[t]);
  }
  return NoiseSchedule(std::move(alpha_bar));
}

LatentGrid forward_noise(const LatentGrid& x0, int t, const LatentGrid& eps,
                         const NoiseSchedule& schedule) {
  require(x0.same_shape(eps), ErrorCode::contract, "forward_noise: x0 and eps shapes differ");
  require(t >= 0 && t <= schedule.steps(), ErrorCode::parameter, "forward_noise: t out of range");
  LatentGrid out(x0.height(), x0.width(), x0.channels());
  kernels::axpby(schedule.alpha(t), x0.values(), schedule.sigma(t), eps.values(), out.values());
  return out;
}

}  // namespace mudikit
