#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mudikit {

/// Seeded random stream shared by every randomized operation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. All derived draws (uniform reals, bounded integers, normals) are
/// computed here rather than through <random> distributions, whose algorithms
/// are implementation-defined. Uniform and integer draws are therefore
/// bit-identical on every conforming platform; normal draws additionally rely
/// on the platform's std::log, std::sqrt, std::cos.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Raw 64-bit engine output.
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in the closed range [lo, hi], unbiased (rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Bernoulli(p) as `uniform() < p`.
  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  void fill_normal(std::span<double> out);

  /// Independent child stream: seed' = splitmix64(seed + (stream + 1) * golden).
  /// Depends only on the parent seed, not on how many draws the parent made.
  RandomSource split(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mudikit
