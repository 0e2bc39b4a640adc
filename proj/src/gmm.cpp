#include "mudikit/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mudikit/error.hpp"
#include "mudikit/kernels.hpp"

namespace mudikit {

GmmScoreModel::GmmScoreModel(std::size_t dim, std::vector<double> means,
                             std::vector<double> weights, double tau)
    : dim_(dim), means_(std::move(means)), weights_(std::move(weights)), tau_(tau) {
  require(dim > 0, ErrorCode::parameter, "mixture dimension must be positive");
  require(!weights_.empty(), ErrorCode::parameter, "mixture needs at least one component");
  require(means_.size() == dim * weights_.size(), ErrorCode::contract,
          "mixture means do not match component count x dimension");
  require(tau > 0.0 && std::isfinite(tau), ErrorCode::parameter, "mixture width must be positive");
  double total = 0.0;
  for (double w : weights_) {
    require(w >= 0.0, ErrorCode::parameter, "mixture weights must be nonnegative");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::parameter, "mixture weights must sum to 1");
}

std::vector<double> gmm_responsibilities(std::span<const double> x_t, int t,
                                         const GmmScoreModel& gmm, const NoiseSchedule& schedule) {
  require(x_t.size() == gmm.dim(), ErrorCode::contract, "x_t dimension differs from mixture");
  const double alpha = schedule.alpha(t), sigma = schedule.sigma(t);
  const double variance = alpha * alpha * gmm.tau() * gmm.tau() + sigma * sigma;
  const std::size_t K = gmm.components();
  std::vector<double> log_r(K);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const double w = gmm.weights()[k];
    log_r[k] = w > 0.0 ? std::log(w) - kernels::offset_squared_norm(x_t, alpha, gmm.mean(k)) /
                                           (2.0 * variance)
                       : -std::numeric_limits<double>::infinity();
    peak = std::max(peak, log_r[k]);
  }
  double total = 0.0;
  for (double& v : log_r) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : log_r) v /= total;
  return log_r;
}

std::vector<double> gmm_posterior_mean(std::span<const double> x_t, int t,
                                       const GmmScoreModel& gmm, const NoiseSchedule& schedule) {
  const auto r = gmm_responsibilities(x_t, t, gmm, schedule);
  const double alpha = schedule.alpha(t), sigma = schedule.sigma(t);
  const double tau2 = gmm.tau() * gmm.tau();
  const double denom = alpha * alpha * tau2 + sigma * sigma;
  // sum_k r_k m_k = (alpha tau^2 x_t + sigma^2 sum_k r_k mu_k) / denom
  std::vector<double> mixed_mean(gmm.dim(), 0.0);
  for (std::size_t k = 0; k < gmm.components(); ++k)
    if (r[k] > 0.0) kernels::axpy(r[k], gmm.mean(k), mixed_mean);
  std::vector<double> out(gmm.dim());
  kernels::axpby(alpha * tau2 / denom, x_t, sigma * sigma / denom, mixed_mean, out);
  return out;
}

std::size_t nearest_component(std::span<const double> x, const GmmScoreModel& gmm) {
  require(x.size() == gmm.dim(), ErrorCode::contract, "point dimension differs from mixture");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < gmm.components(); ++k) {
    const double d = kernels::squared_distance(x, gmm.mean(k));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace mudikit
