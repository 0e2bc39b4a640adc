#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mudikit/dnc.hpp"
#include "mudikit/gmm.hpp"
#include "mudikit/init.hpp"
#include "mudikit/schedule.hpp"

namespace mudikit {

// ---------------------------------------------------------------------------
// Identity-mixing analogue for the gamma sweep
// ---------------------------------------------------------------------------

/// Three-component mixture over composite latents:
///   0: subject A left, subject B right (the init composite's layout)
///   1: the same two subjects with their places exchanged
///   2: the midpoint of 0 and 1, i.e. both positions hold a blend of A and B
struct IdentityMixSetup {
  static constexpr std::size_t target_component = 0;

  std::vector<SegmentedSubject> subjects;
  std::vector<LayoutBox> target_layout;
  PreparedInit prepared;
  GmmScoreModel gmm;
};

/// Subjects are placed flush left / flush right and vertically centred.
IdentityMixSetup make_identity_mix_setup(std::span<const SegmentedSubject> subjects,
                                         const Encoder& encoder, int canvas_height,
                                         int canvas_width, std::span<const double> weights,
                                         double tau);

struct GammaSweepRow {
  double gamma = 0.0;
  double match_rate = 0.0;
  int matches = 0;
  int trials = 0;
  std::uint64_t seed = 0;
};

/// For each gamma, `trials` samples started from the mean-shifted init of the
/// target composite; a trial matches when the final latent is nearest to the
/// target component. Trial i uses RandomSource(seed).split(i) for both its
/// init noise and its sampler noise, so every gamma sees the same draws.
std::vector<GammaSweepRow> gamma_sweep(const IdentityMixSetup& setup, std::span<const double> gammas,
                                       int trials, const NoiseSchedule& schedule, int sample_steps,
                                       std::uint64_t seed, double eta = 1.0,
                                       InitVariant variant = InitVariant::mean_shift,
                                       unsigned threads = 0);

/// Header `gamma,match_rate,trials,seed`; reals with 6 decimals.
std::string gamma_sweep_csv(std::span<const GammaSweepRow> rows);
/// Static line plot of match rate against gamma.
std::string gamma_sweep_svg(std::span<const GammaSweepRow> rows);

// ---------------------------------------------------------------------------
// Iterative-training selection
// ---------------------------------------------------------------------------

struct ScoredItem {
  std::string id;
  double score = 0.0;
};

/// Ids of the k highest scores, highest first; equal scores in ascending id
/// order.
std::vector<std::string> select_top_k(std::span<const ScoredItem> items, std::size_t k);

// ---------------------------------------------------------------------------
// Sandbox image scoring
// ---------------------------------------------------------------------------

/// Nearest-neighbour upsampling of a latent by `factor`, clamped to [0,1].
/// The inverse of AveragePoolEncoder on block-constant images.
Image decode_latent_image(const LatentGrid& latent, int factor);

struct ImageScore {
  double score = 0.0;
  DetectionRecord detections;
  MatrixOutcome matrices;
};

/// Detect-and-Compare for one image: component detection, proxy embedding
/// per box, then the D&C score against `references`.
ImageScore score_image(const Image& image, std::span<const EmbeddingSet> references,
                       double threshold, RowSortRule rule = RowSortRule::greedy_global,
                       const std::string& image_id = "image");

/// Same, with detections supplied from a file instead of the detector.
ImageScore score_detections(const Image& image, const DetectionRecord& detections,
                            std::span<const EmbeddingSet> references,
                            RowSortRule rule = RowSortRule::greedy_global);

}  // namespace mudikit
