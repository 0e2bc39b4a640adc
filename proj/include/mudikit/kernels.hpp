#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops behind the similarity, mixture and diffusion
// code. Each kernel has a scalar reference and SIMD variants (AVX2+FMA on
// x86-64, NEON on AArch64); the variant is chosen once at startup from CPU
// features and can be pinned with MUDIKIT_SIMD=scalar|avx2|neon.
//
// Elementwise kernels (axpby, offset_axpy) are bit-identical across
// variants: the scalar path uses std::fma exactly where the vector path uses
// fused multiply-add. Reductions (dot, squared_distance, offset_squared_norm)
// differ only in summation order.

namespace mudikit::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // sum_i (x[i] - alpha * mu[i])^2
  double (*offset_squared_norm)(const double* x, double alpha, const double* mu, std::size_t n);
  // out[i] = fma(a, x[i], b * y[i]); out may alias x or y.
  void (*axpby)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
  // out[i] = fma(a, x[i], out[i])
  void (*axpy)(double a, const double* x, double* out, std::size_t n);
};

const KernelTable& scalar_table();
bool isa_available(Isa isa);
const KernelTable& table(Isa isa);

/// Table selected at startup (or by force_isa).
const KernelTable& active();

/// Pins the dispatch to `isa`; throws when the variant is not built or not
/// supported by the CPU.
void force_isa(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}
inline double offset_squared_norm(std::span<const double> x, double alpha,
                                  std::span<const double> mu) {
  return active().offset_squared_norm(x.data(), alpha, mu.data(), x.size());
}
inline void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
                  std::span<double> out) {
  active().axpby(a, x.data(), b, y.data(), out.data(), out.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> out) {
  active().axpy(a, x.data(), out.data(), out.size());
}

}  // namespace mudikit::kernels
