#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mudikit/core.hpp"
#include "mudikit/latent.hpp"
#include "mudikit/random.hpp"
#include "mudikit/schedule.hpp"

namespace mudikit {

/// Image -> latent map with an exact integer downscale factor.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual int downscale_factor() const = 0;
  virtual LatentGrid encode(const Image& image) const = 0;
};

/// Per-channel mean over each factor x factor block.
class AveragePoolEncoder final : public Encoder {
 public:
  explicit AveragePoolEncoder(int factor = 8);
  int downscale_factor() const override { return factor_; }
  LatentGrid encode(const Image& image) const override;

 private:
  int factor_;
};

/// Returns a latent produced elsewhere (e.g. by a real VAE) after checking
/// that it matches the image size.
class FileBackedEncoder final : public Encoder {
 public:
  FileBackedEncoder(LatentGrid latent, int factor);
  static FileBackedEncoder from_file(const std::filesystem::path& path, int factor);

  int downscale_factor() const override { return factor_; }
  LatentGrid encode(const Image& image) const override;

 private:
  LatentGrid latent_;
  int factor_;
};

enum class LayoutSource { random, file };
enum class InitVariant { mean_shift, forward_noise };

struct InitConfig {
  double gamma = 1.0;
  std::uint64_t noise_seed = 0;
  LayoutSource layout_source = LayoutSource::random;
  InitVariant variant = InitVariant::mean_shift;
  int canvas_height = 1024;
  int canvas_width = 1024;
  int max_margin = 1;
  int downscale_factor = 8;

  void validate() const;

  friend bool operator==(const InitConfig&, const InitConfig&) = default;
};

/// gamma at or above this value is flagged as likely to saturate.
inline constexpr double kSaturationGamma = 4.0;

/// Recommended gamma by subject count: 2 for two or three subjects, 3 beyond.
double recommended_gamma(std::size_t subject_count);

/// Layout following the Seg-Mix placement rule. One subject: uniform
/// position. Two: left/right flush with random margins and order swap. N > 2:
/// the width is split into N equal slots (assigned in random order); a
/// subject narrower than its slot is placed at a uniform offset inside it,
/// a wider one is centred on it. Vertical offsets are uniform.
std::vector<LayoutBox> random_layout(std::span<const SegmentedSubject> subjects, int canvas_height,
                                     int canvas_width, int max_margin, RandomSource& rng);

struct LlmLayout {
  int canvas_height = 0;
  int canvas_width = 0;
  std::vector<LayoutBox> boxes;
};

/// Reads a layout JSON file. String subject references are resolved against
/// `identifiers`. Overlapping boxes are allowed.
LlmLayout load_llm_layout(const std::filesystem::path& path,
                          std::span<const std::string> identifiers = {});

/// Validation shared by the file loader: nonempty, positive extents, inside
/// the canvas.
void validate_layout(const LlmLayout& layout);

/// Encoded composite gated by the latent-resolution union mask; computed
/// once per request and reused across seeds and gamma values.
struct PreparedInit {
  Image composite;
  Mask composite_mask;
  LatentGrid masked_latent;
  Mask latent_mask;
};

PreparedInit prepare_initialization(std::span<const SegmentedSubject> subjects,
                                    std::span<const LayoutBox> layout, const Encoder& encoder,
                                    int canvas_height, int canvas_width);

struct InitResult {
  LatentGrid latent;
  bool saturation_warning = false;
};

/// mean_shift:    z = gamma * masked + noise
/// forward_noise: z = sqrt(abar_T) * gamma * masked + sqrt(1 - abar_T) * noise
InitResult initial_latent(const PreparedInit& prepared, const InitConfig& config,
                          const LatentGrid& noise, const NoiseSchedule* schedule = nullptr);

/// Full pipeline: paste, encode once, draw unit Gaussian noise from `rng`,
/// combine. `schedule` is required for the forward_noise variant.
InitResult latent_initialize(std::span<const SegmentedSubject> subjects,
                             std::span<const LayoutBox> layout, const Encoder& encoder,
                             const InitConfig& config, RandomSource& rng,
                             const NoiseSchedule* schedule = nullptr);

}  // namespace mudikit
