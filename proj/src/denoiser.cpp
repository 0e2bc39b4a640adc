#include "mudikit/denoiser.hpp"

#include <algorithm>

#include "mudikit/error.hpp"

namespace mudikit {

AffineDenoiser::AffineDenoiser(std::size_t dim, int steps, int conditions)
    : dim_(dim), steps_(steps), conditions_(conditions) {
  require(dim > 0 && steps >= 1 && conditions >= 1, ErrorCode::parameter,
          "affine denoiser needs positive dim, steps and conditions");
  params_.assign(static_cast<std::size_t>(steps + 1) + dim * (2 + conditions), 0.0);
}

AffineDenoiser AffineDenoiser::random(std::size_t dim, int steps, int conditions,
                                      RandomSource& rng, double scale) {
  AffineDenoiser model(dim, steps, conditions);
  for (double& p : model.params_) p = rng.uniform(-scale, scale);
  return model;
}

void AffineDenoiser::set_parameters(std::span<const double> params) {
  require(params.size() == params_.size(), ErrorCode::contract, "parameter length mismatch");
  std::copy(params.begin(), params.end(), params_.begin());
}

void AffineDenoiser::check(std::span<const double> x_t, int t, int condition) const {
  require(x_t.size() == dim_, ErrorCode::contract, "denoiser input dimension mismatch");
  require(t >= 0 && t <= steps_, ErrorCode::parameter, "denoiser timestep out of range");
  require(condition >= 0 && condition < conditions_, ErrorCode::parameter,
          "denoiser condition out of range");
}

void AffineDenoiser::predict(std::span<const double> x_t, int t, int condition,
                             std::span<double> out) const {
  check(x_t, t, condition);
  const double s = params_[t];
  const double* w = params_.data() + steps_ + 1;
  const double* b = w + dim_;
  const double* e = b + dim_ + static_cast<std::size_t>(condition) * dim_;
  for (std::size_t i = 0; i < dim_; ++i) out[i] = (s + w[i]) * x_t[i] + b[i] + e[i];
}

void AffineDenoiser::backward(std::span<const double> x_t, int t, int condition,
                              std::span<const double> upstream, std::span<double> grad) const {
  check(x_t, t, condition);
  require(grad.size() == params_.size(), ErrorCode::contract, "gradient length mismatch");
  double* gw = grad.data() + steps_ + 1;
  double* gb = gw + dim_;
  double* ge = gb + dim_ + static_cast<std::size_t>(condition) * dim_;
  for (std::size_t i = 0; i < dim_; ++i) {
    grad[t] += upstream[i] * x_t[i];
    gw[i] += upstream[i] * x_t[i];
    gb[i] += upstream[i];
    ge[i] += upstream[i];
  }
}

void ZeroDenoiser::set_parameters(std::span<const double> params) {
  require(params.empty(), ErrorCode::contract, "zero denoiser has no parameters");
}

void ZeroDenoiser::predict(std::span<const double> x_t, int, int, std::span<double> out) const {
  require(x_t.size() == dim_, ErrorCode::contract, "denoiser input dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);
}

}  // namespace mudikit
