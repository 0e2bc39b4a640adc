#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mudikit/core.hpp"
#include "mudikit/random.hpp"

namespace mudikit {

struct PromptTemplate {
  std::string composite_template = "A photo of {ids}, simple background.";
  /// Prepend "<N> <count_noun>: " to the prompt.
  bool prefix_count = false;
  std::string count_noun = "objects";

  /// Fills the single {ids} slot: "a", "a and b", "a, b and c".
  std::string render(std::span<const std::string> identifiers) const;
  void validate() const;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

struct SegMixConfig {
  static constexpr double swap_prob = 0.5;

  int out_height = 1024;
  int out_width = 1024;
  /// Upper bound (pixels, inclusive) of the random margin from each side.
  int max_margin = 1;
  /// Per-subject scale ratios (relative-size control). When absent a random
  /// ratio in [random_scale_min, random_scale_max] of the largest fitting
  /// factor is drawn.
  std::optional<std::vector<double>> scales;
  double random_scale_min = 0.6;
  double random_scale_max = 1.0;
  double seg_mix_prob = 0.3;
  float background_value = 0.0f;
  PromptTemplate prompt;

  void validate() const;

  friend bool operator==(const SegMixConfig&, const SegMixConfig&) = default;
};

struct CompositeSample {
  Image image;
  Mask mask;
  std::vector<LayoutBox> layout;
  std::string prompt;
  std::vector<std::string> subject_identifiers;

  friend bool operator==(const CompositeSample&, const CompositeSample&) = default;
};

/// Every random choice create_seg_mix makes, in draw order.
struct SegMixDraws {
  std::vector<double> scales;  // per input subject, before the swap
  bool swapped = false;
  int margins[2] = {0, 0};
  int offsets_y[2] = {0, 0};  // per pasted position
};

/// Draws scales, swap, margins, then vertical offsets (in that order).
SegMixDraws draw_seg_mix(std::span<const SegmentedSubject> subjects, const SegMixConfig& config,
                         RandomSource& rng);

/// Deterministic composition for given draws. Offsets and margins are clamped
/// so every resized subject lies fully on the canvas.
CompositeSample compose_seg_mix(std::span<const SegmentedSubject> subjects,
                                const SegMixConfig& config, const SegMixDraws& draws);

/// Two segmented subjects on a blank canvas: subject 0 at margin m0 from the
/// left edge, subject 1 at margin m1 from the right edge, random order swap.
CompositeSample create_seg_mix(std::span<const SegmentedSubject> subjects,
                               const SegMixConfig& config, RandomSource& rng);

/// Cut-Mix baseline: each side of a random vertical boundary takes a
/// rectangular crop of one subject image, background included.
/// `boundary` forces the split column when given.
CompositeSample cutmix_compose(std::span<const SegmentedSubject> subjects,
                               const SegMixConfig& config, RandomSource& rng,
                               std::optional<int> boundary = std::nullopt);

struct TrainingSample {
  SegmentedSubject subject;
  std::string prompt;
};

struct AugmentResult {
  Image image;
  std::string prompt;
  bool augmented = false;
};

/// With probability seg_mix_prob replaces the sample by a Seg-Mix composite
/// with a subject of a different class drawn from `pool`.
AugmentResult augment_sample(const TrainingSample& sample, std::span<const SegmentedSubject> pool,
                             const SegMixConfig& config, RandomSource& rng);

/// Composites of random prior-subject pairs, prompted with class nouns.
std::vector<CompositeSample> build_prior_set(std::span<const SegmentedSubject> priors, int count,
                                             const SegMixConfig& config, RandomSource& rng);

/// Largest uniform factor for which the subject fits the canvas, capped at 8.
double max_fit_scale(const SegmentedSubject& subject, int canvas_height, int canvas_width);

}  // namespace mudikit
