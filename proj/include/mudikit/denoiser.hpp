#pragma once

#include <span>
#include <vector>

#include "mudikit/random.hpp"

namespace mudikit {

/// Trainable noise predictor eps_theta(x_t, t, c). Only used to exercise the
/// loss and gradient code; sampling in the sandbox uses the analytic mixture
/// denoiser.
class DenoiserModel {
 public:
  virtual ~DenoiserModel() = default;

  virtual std::size_t dim() const = 0;
  virtual std::span<const double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> params) = 0;
  std::size_t parameter_count() const { return parameters().size(); }

  virtual void predict(std::span<const double> x_t, int t, int condition,
                       std::span<double> out) const = 0;

  /// grad += (d predict / d params)^T upstream
  virtual void backward(std::span<const double> x_t, int t, int condition,
                        std::span<const double> upstream, std::span<double> grad) const = 0;
};

/// eps_i = (s_t + w_i) * x_i + b_i + e_{c,i}
/// Parameters are laid out as [s_0..s_T | w | b | e_0 | e_1 | ...].
class AffineDenoiser final : public DenoiserModel {
 public:
  AffineDenoiser(std::size_t dim, int steps, int conditions);
  /// Parameters drawn uniformly from [-scale, scale].
  static AffineDenoiser random(std::size_t dim, int steps, int conditions, RandomSource& rng,
                               double scale = 0.1);

  std::size_t dim() const override { return dim_; }
  std::span<const double> parameters() const override { return params_; }
  void set_parameters(std::span<const double> params) override;

  void predict(std::span<const double> x_t, int t, int condition,
               std::span<double> out) const override;
  void backward(std::span<const double> x_t, int t, int condition,
                std::span<const double> upstream, std::span<double> grad) const override;

 private:
  void check(std::span<const double> x_t, int t, int condition) const;

  std::size_t dim_;
  int steps_;
  int conditions_;
  std::vector<double> params_;
};

/// Parameter-free model that always predicts zero noise.
class ZeroDenoiser final : public DenoiserModel {
 public:
  explicit ZeroDenoiser(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const override { return dim_; }
  std::span<const double> parameters() const override { return {}; }
  void set_parameters(std::span<const double> params) override;
  void predict(std::span<const double> x_t, int t, int condition,
               std::span<double> out) const override;
  void backward(std::span<const double>, int, int, std::span<const double>,
                std::span<double>) const override {}

 private:
  std::size_t dim_;
};

}  // namespace mudikit
