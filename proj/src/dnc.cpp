#include "mudikit/dnc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mudikit/error.hpp"
#include "mudikit/kernels.hpp"

namespace mudikit {

namespace {

constexpr double kUnitTolerance = 1e-6;

void check_rows(std::size_t dim, const std::vector<double>& data, const std::string& id) {
  require(dim > 0, ErrorCode::parameter, "embedding set '" + id + "': dimension must be positive");
  require(!data.empty() && data.size() % dim == 0, ErrorCode::contract,
          "embedding set '" + id + "': needs at least one vector of the common dimension");
  for (double v : data)
    require(std::isfinite(v), ErrorCode::non_finite, "embedding set '" + id + "': non-finite value");
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::string subject_id, std::size_t dim, std::vector<double> data)
    : subject_id_(std::move(subject_id)), dim_(dim), data_(std::move(data)) {
  check_rows(dim_, data_, subject_id_);
  for (std::size_t i = 0; i < count(); ++i) {
    const double norm = std::sqrt(kernels::dot(vector(i), vector(i)));
    require(std::abs(norm - 1.0) <= kUnitTolerance, ErrorCode::contract,
            "embedding set '" + subject_id_ + "': vector " + std::to_string(i) +
                " is not unit norm");
  }
}

EmbeddingSet EmbeddingSet::normalized(std::string subject_id, std::size_t dim,
                                      std::vector<double> data) {
  check_rows(dim, data, subject_id);
  for (std::size_t off = 0; off < data.size(); off += dim) {
    std::span<double> row(data.data() + off, dim);
    const double norm = std::sqrt(kernels::dot(row, row));
    require(norm > 0.0, ErrorCode::contract, "embedding set '" + subject_id + "': zero vector");
    for (double& v : row) v /= norm;
  }
  return EmbeddingSet(std::move(subject_id), dim, std::move(data));
}

SquareMatrix::SquareMatrix(std::size_t n, std::vector<double> data) : n_(n), data_(std::move(data)) {
  require(data_.size() == n * n, ErrorCode::contract, "matrix data is not square");
}

double subject_similarity(const EmbeddingSet& a, const EmbeddingSet& b) {
  require(a.dim() == b.dim(), ErrorCode::contract,
          "embedding dimensions differ: '" + a.subject_id() + "' has " + std::to_string(a.dim()) +
              ", '" + b.subject_id() + "' has " + std::to_string(b.dim()));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i)
    for (std::size_t j = 0; j < b.count(); ++j) sum += kernels::dot(a.vector(i), b.vector(j));
  return sum / static_cast<double>(a.count() * b.count());
}

std::vector<std::size_t> row_sort_order(const SquareMatrix& m, RowSortRule rule) {
  const std::size_t n = m.size();
  std::vector<std::size_t> order(n, 0);
  std::vector<bool> row_used(n, false), col_used(n, false);
  if (rule == RowSortRule::greedy_global) {
    for (std::size_t step = 0; step < n; ++step) {
      std::size_t best_r = n, best_c = n;
      for (std::size_t r = 0; r < n; ++r) {
        if (row_used[r]) continue;
        for (std::size_t c = 0; c < n; ++c) {
          if (col_used[c]) continue;
          // Strict comparison keeps the first (lowest row, lowest column) maximum.
          if (best_r == n || m(r, c) > m(best_r, best_c)) {
            best_r = r;
            best_c = c;
          }
        }
      }
      row_used[best_r] = col_used[best_c] = true;
      order[best_c] = best_r;
    }
  } else {
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t best_r = n;
      for (std::size_t r = 0; r < n; ++r)
        if (!row_used[r] && (best_r == n || m(r, c) > m(best_r, c))) best_r = r;
      row_used[best_r] = true;
      order[c] = best_r;
    }
  }
  return order;
}

SquareMatrix row_wise_sort(const SquareMatrix& m, RowSortRule rule) {
  const auto order = row_sort_order(m, rule);
  SquareMatrix out(m.size());
  for (std::size_t j = 0; j < m.size(); ++j)
    for (std::size_t k = 0; k < m.size(); ++k) out(j, k) = m(order[j], k);
  return out;
}

MatrixOutcome build_matrices(std::span<const EmbeddingSet> detections,
                             std::span<const EmbeddingSet> references, RowSortRule rule) {
  if (detections.size() != references.size())
    return CountError{detections.size(), references.size()};
  const std::size_t n = references.size();
  SimilarityPair pair{SquareMatrix(n), SquareMatrix(n), SquareMatrix(n), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    pair.reference_order.push_back(references[i].subject_id());
    for (std::size_t j = 0; j < n; ++j) {
      pair.s_gt(i, j) = j < i ? pair.s_gt(j, i) : subject_similarity(references[i], references[j]);
      pair.s_dc_raw(i, j) = subject_similarity(detections[i], references[j]);
    }
  }
  pair.row_order = row_sort_order(pair.s_dc_raw, rule);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) pair.s_dc(j, k) = pair.s_dc_raw(pair.row_order[j], k);
  return pair;
}

double dnc_score(const SimilarityPair& pair) {
  require(pair.s_gt.size() == pair.s_dc.size(), ErrorCode::contract,
          "similarity matrices differ in size");
  return 1.0 - kernels::squared_distance(pair.s_gt.values(), pair.s_dc.values());
}

double dnc_score(const MatrixOutcome& outcome) {
  if (std::holds_alternative<CountError>(outcome)) return 0.0;
  return dnc_score(std::get<SimilarityPair>(outcome));
}

double mean_similarity_baseline(const EmbeddingSet& generated,
                                std::span<const EmbeddingSet> references) {
  require(!references.empty(), ErrorCode::parameter, "no references given");
  double sum = 0.0;
  for (const auto& r : references) sum += subject_similarity(generated, r);
  return sum / static_cast<double>(references.size());
}

std::vector<std::int64_t> doubled_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::int64_t> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    // Positions i..j (0-based) share the average of ranks i+1..j+1.
    const auto doubled = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = doubled;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::statistic_undefined, "spearman: length mismatch");
  require(xs.size() >= 2, ErrorCode::statistic_undefined, "spearman: needs at least 2 points");
  for (double v : xs) require(!std::isnan(v), ErrorCode::statistic_undefined, "spearman: NaN input");
  for (double v : ys) require(!std::isnan(v), ErrorCode::statistic_undefined, "spearman: NaN input");
  const auto rx = doubled_ranks(xs);
  const auto ry = doubled_ranks(ys);
  // Doubled ranks average to n + 1, so centred values stay integral.
  const auto centre = static_cast<std::int64_t>(xs.size()) + 1;
  std::int64_t sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::int64_t dx = rx[i] - centre, dy = ry[i] - centre;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  require(sxx > 0 && syy > 0, ErrorCode::statistic_undefined, "spearman: constant input");
  return static_cast<double>(sxy) /
         std::sqrt(static_cast<double>(sxx) * static_cast<double>(syy));
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), ErrorCode::statistic_undefined, "auroc: length mismatch");
  std::int64_t positives = 0;
  for (int l : labels) {
    require(l == 0 || l == 1, ErrorCode::parameter, "auroc: labels must be 0 or 1");
    positives += l;
  }
  const auto negatives = static_cast<std::int64_t>(labels.size()) - positives;
  require(positives > 0 && negatives > 0, ErrorCode::statistic_undefined,
          "auroc: both classes must be present");
  const auto ranks = doubled_ranks(scores);
  std::int64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i]) doubled_rank_sum += ranks[i];
  // Mann-Whitney: 2U = 2 R+ - n+ (n+ + 1)
  const std::int64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
  return static_cast<double>(doubled_u) / static_cast<double>(2 * positives * negatives);
}

void DetectionRecord::validate() const {
  for (const auto& b : boxes) {
    require(b.x1 > b.x0 && b.y1 > b.y0, ErrorCode::validation,
            "detection '" + b.label + "' in '" + image_id + "' has an empty box");
    require(b.confidence >= 0.0 && b.confidence <= 1.0, ErrorCode::validation,
            "detection '" + b.label + "' in '" + image_id + "' has confidence outside [0,1]");
  }
}

}  // namespace mudikit
