// Test fixtures and brute-force oracles. Nothing here calls into the code
// under test except to build inputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "mudikit/core.hpp"
#include "mudikit/random.hpp"

namespace testing {

using namespace mudikit;

inline SegmentedSubject solid_subject(int h, int w, float value, const std::string& id = "s",
                                      const std::string& cls = "thing", int channels = 3) {
  return SegmentedSubject{Image(h, w, channels, value), Mask(h, w, 1), id, cls};
}

/// Random intensities and a random mask with at least one pixel set.
inline SegmentedSubject random_subject(int h, int w, RandomSource& rng, const std::string& id = "s",
                                       const std::string& cls = "thing") {
  Image image(h, w, 3);
  for (float& v : image.pixels()) v = static_cast<float>(rng.uniform());
  Mask mask(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask.at(y, x) = rng.bernoulli(0.7) ? 1 : 0;
  mask.at(static_cast<int>(rng.uniform_int(0, h - 1)), static_cast<int>(rng.uniform_int(0, w - 1))) = 1;
  return SegmentedSubject{std::move(image), std::move(mask), id, cls};
}

struct BoxOracle {
  int x0 = std::numeric_limits<int>::max(), y0 = std::numeric_limits<int>::max(), x1 = -1, y1 = -1;
};

/// Min/max over nonzero coordinates; x1/y1 inclusive.
inline BoxOracle bbox_oracle(const Mask& m) {
  BoxOracle b;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(y, x)) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  return b;
}

/// Doubled average rank by counting: 2 * (#smaller) + #equal + 1.
inline std::vector<std::int64_t> counting_doubled_ranks(const std::vector<double>& v) {
  std::vector<std::int64_t> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::int64_t less = 0, equal = 0;
    for (double u : v) {
      less += u < v[i];
      equal += u == v[i];
    }
    r[i] = 2 * less + equal + 1;
  }
  return r;
}

/// Pearson correlation of average ranks from raw moment sums.
/// n * sum(ab) - sum(a) sum(b) is exactly n times the centred sum.
inline double spearman_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto a = counting_doubled_ranks(xs), b = counting_doubled_ranks(ys);
  const auto n = static_cast<std::int64_t>(xs.size());
  std::int64_t sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  const std::int64_t cxy = n * sab - sa * sb, cxx = n * saa - sa * sa, cyy = n * sbb - sb * sb;
  return static_cast<double>(cxy / n) / std::sqrt(static_cast<double>(cxx / n) * static_cast<double>(cyy / n));
}

/// Pairwise count: positive above negative scores 2, ties 1, over 2 n+ n-.
inline double auroc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::int64_t doubled = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) ++pos;
    else ++neg;
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (!labels[j]) doubled += scores[i] > scores[j] ? 2 : scores[i] == scores[j] ? 1 : 0;
  }
  return static_cast<double>(doubled) / static_cast<double>(2 * pos * neg);
}

inline std::vector<double> random_unit(std::size_t dim, RandomSource& rng) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  do {
    rng.fill_normal(v);
    n2 = 0.0;
    for (double x : v) n2 += x * x;
  } while (n2 == 0.0);
  const double n = std::sqrt(n2);
  for (double& x : v) x /= n;
  return v;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mudikit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
