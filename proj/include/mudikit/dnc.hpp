#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mudikit {

/// Unit-norm embeddings of one subject (reference images or detected crops),
/// stored row-major as count x dim.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  /// Requires every row to have unit norm within 1e-6.
  EmbeddingSet(std::string subject_id, std::size_t dim, std::vector<double> data);
  /// Normalizes each row; zero or non-finite rows are rejected.
  static EmbeddingSet normalized(std::string subject_id, std::size_t dim, std::vector<double> data);

  const std::string& subject_id() const noexcept { return subject_id_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::span<const double> vector(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * dim_, dim_);
  }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  std::string subject_id_;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  SquareMatrix(std::size_t n, std::vector<double> data);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * n_, n_);
  }
  std::span<const double> values() const noexcept { return data_; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

enum class RowSortRule {
  /// Repeatedly take the largest unassigned entry (ties: lowest row, then
  /// lowest column) and move that row to that column's index.
  greedy_global,
  /// For column 0, 1, ... in turn, take the unassigned row with the largest
  /// entry in that column (ties: lowest row).
  column_sequential,
};

struct SimilarityPair {
  SquareMatrix s_gt;      // reference x reference
  SquareMatrix s_dc;      // detection x reference, rows sorted
  SquareMatrix s_dc_raw;  // detection x reference, input order
  std::vector<std::size_t> row_order;  // s_dc row j came from s_dc_raw row row_order[j]
  std::vector<std::string> reference_order;
};

/// Detection count differs from reference count; scores as 0.
struct CountError {
  std::size_t detections = 0;
  std::size_t references = 0;
};

using MatrixOutcome = std::variant<SimilarityPair, CountError>;

/// Mean of all pairwise inner products between rows of a and rows of b.
double subject_similarity(const EmbeddingSet& a, const EmbeddingSet& b);

MatrixOutcome build_matrices(std::span<const EmbeddingSet> detections,
                             std::span<const EmbeddingSet> references,
                             RowSortRule rule = RowSortRule::greedy_global);

/// Returns the permutation: output row j is input row order[j].
std::vector<std::size_t> row_sort_order(const SquareMatrix& matrix,
                                        RowSortRule rule = RowSortRule::greedy_global);
SquareMatrix row_wise_sort(const SquareMatrix& matrix,
                           RowSortRule rule = RowSortRule::greedy_global);

/// 1 - ||S_gt - S_dc||_F^2 (unclamped); 0 for a count error.
double dnc_score(const MatrixOutcome& outcome);
double dnc_score(const SimilarityPair& pair);

/// Display floor for leaderboards; raw scores stay unclamped.
inline double display_score(double raw) { return raw < 0.0 ? 0.0 : raw; }

/// Single-subject metric extended to many subjects: mean similarity of the
/// generated image to every reference.
double mean_similarity_baseline(const EmbeddingSet& generated,
                                std::span<const EmbeddingSet> references);

/// Pearson correlation of average-tie ranks.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Probability that a random positive outscores a random negative, ties 1/2.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Doubled average-tie ranks (rank 1 -> 2), exact in integers.
std::vector<std::int64_t> doubled_ranks(std::span<const double> values);

struct DetectionBox {
  std::string label;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double confidence = 0.0;

  friend bool operator==(const DetectionBox&, const DetectionBox&) = default;
};

enum class DetectionSource { external_file, component_detector };

struct DetectionRecord {
  std::string image_id;
  std::vector<DetectionBox> boxes;
  DetectionSource source = DetectionSource::external_file;

  void validate() const;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

}  // namespace mudikit
