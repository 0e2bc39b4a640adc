#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "mudikit/core.hpp"
#include "mudikit/dnc.hpp"
#include "mudikit/random.hpp"

namespace mudikit {

enum class SpriteShape { disk, square, triangle };

/// Procedural subject: a flat-coloured shape centred on a white canvas.
struct SpriteSpec {
  int canvas_height = 32;
  int canvas_width = 32;
  SpriteShape shape = SpriteShape::disk;
  std::array<float, 3> color = {1.0f, 0.0f, 0.0f};
  /// Diameter, side or base length in pixels; must be below both canvas dims.
  int size = 16;
  std::string identifier;
  std::string class_text;
  /// Amplitude of per-pixel uniform texture drawn from the rng (0 = flat).
  float texture = 0.0f;

  void validate() const;
};

/// Rasterizes without anti-aliasing; the mask is the exact shape support.
/// Disk: pixel centres within radius size/2 of the canvas centre.
/// Square: size x size block. Triangle: apex-up, base and height = size.
std::vector<SegmentedSubject> gen_sprites(std::span<const SpriteSpec> specs, RandomSource& rng);

/// 4-connected components of pixels whose largest channel exceeds
/// `threshold`; components of at least 9 pixels become boxes with exclusive
/// x1/y1 and confidence = component size / canvas size. Boxes are ordered by
/// the scan position of each component's first pixel.
DetectionRecord detect_components(const Image& image, double threshold,
                                  const std::string& image_id = "image");

/// Hand-crafted stand-in for a perceptual embedding: the crop is resized to
/// 16x16, then 8-bin per-channel histograms (each summing to 1) are
/// concatenated with 4x4 per-channel block means, and the result is
/// unit-normalized. Dimension 72.
EmbeddingSet proxy_embed(const Image& image, const LayoutBox& box,
                         const std::string& subject_id = "crop");

inline constexpr std::size_t kProxyEmbeddingDim = 72;

}  // namespace mudikit
