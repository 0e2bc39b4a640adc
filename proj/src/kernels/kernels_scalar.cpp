#include <cmath>

#include "kernels_internal.hpp"

namespace mudikit::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double offset_squared_norm_scalar(const double* x, double alpha, const double* mu, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fma(-alpha, mu[i], x[i]);
    sum += d * d;
  }
  return sum;
}

void axpby_scalar(double a, const double* x, double b, const double* y, double* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fma(a, x[i], b * y[i]);
}

void axpy_scalar(double a, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fma(a, x[i], out[i]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar,         dot_scalar,   squared_distance_scalar,
                                 offset_squared_norm_scalar, axpby_scalar, axpy_scalar};
  return table;
}

}  // namespace mudikit::kernels
