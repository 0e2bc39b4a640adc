#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mudikit/core.hpp"
#include "mudikit/dnc.hpp"
#include "mudikit/init.hpp"
#include "mudikit/latent.hpp"
#include "mudikit/segmix.hpp"

namespace mudikit {

// ---------------------------------------------------------------------------
// Embedding file (little-endian):
//   "MDIE" | u32 version = 1 | u32 id_len | id (UTF-8) | u32 count | u32 dim
//   | count * dim f32 row-major
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kEmbeddingVersion = 1;

struct EmbeddingReadResult {
  EmbeddingSet set;
  /// Non-fatal notes, e.g. vectors renormalized by more than 1e-3.
  std::vector<std::string> warnings;
};

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set);
/// Rows within 1e-6 of unit norm are kept bit-exact; others are renormalized.
EmbeddingReadResult decode_embeddings(std::span<const std::uint8_t> bytes);
void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingReadResult read_embeddings(const std::filesystem::path& path);

/// Every *.mdie file in `dir`, sorted by file name.
std::vector<EmbeddingSet> read_embedding_dir(const std::filesystem::path& dir,
                                             std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Latent file (little-endian): "MDIL" | u32 version = 1 | u32 h | u32 w | u32 c
//   | h * w * c f64
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_latent(const LatentGrid& latent);
LatentGrid decode_latent(std::span<const std::uint8_t> bytes);
void write_latent(const LatentGrid& latent, const std::filesystem::path& path);
LatentGrid read_latent(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// PNG images and masks
// ---------------------------------------------------------------------------

/// 8-bit grayscale or RGB(A) PNG, scaled to [0,1]; alpha is dropped.
Image load_image(const std::filesystem::path& path);
/// 8-bit PNG; intensities are rounded to the nearest of 256 levels.
void save_image(const Image& image, const std::filesystem::path& path);

struct MaskMetadata {
  std::string subject;
  std::string class_text;
  std::string source;

  friend bool operator==(const MaskMetadata&, const MaskMetadata&) = default;
};

struct LoadedMask {
  Mask mask;
  MaskMetadata metadata;
};

/// `mask.png` -> `mask.json`
std::filesystem::path mask_sidecar_path(const std::filesystem::path& png_path);

/// Single-channel PNG holding only 0 and 255, plus the JSON sidecar
/// {"subject","class","source"}.
void save_mask(const Mask& mask, const MaskMetadata& metadata, const std::filesystem::path& path);
LoadedMask load_mask(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Subject directories: NAME.png, NAME.mask.png, NAME.mask.json per subject
// ---------------------------------------------------------------------------

void save_subject(const SegmentedSubject& subject, const std::filesystem::path& dir,
                  const std::string& source = "sprite");
std::vector<SegmentedSubject> load_subjects(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

/// {"canvas":[H,W],"boxes":[{"subject":<index|identifier>,"x","y","w","h"}]}
std::string layout_to_json(const LlmLayout& layout);
LlmLayout parse_layout_json(const std::string& text, std::span<const std::string> identifiers = {});
LlmLayout read_layout_json(const std::filesystem::path& path,
                           std::span<const std::string> identifiers = {});
void write_layout_json(const LlmLayout& layout, const std::filesystem::path& path);

/// {"image_id":str,"boxes":[{"label","x0","y0","x1","y1","confidence"}]}
std::string detections_to_json(const DetectionRecord& record);
DetectionRecord parse_detections_json(const std::string& text);
DetectionRecord read_detections(const std::filesystem::path& path);
void write_detections(const DetectionRecord& record, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Composite bundle: image.png, mask.png (+ mask.json), layout.json, prompt.txt
// ---------------------------------------------------------------------------

void write_bundle(const CompositeSample& sample, const std::filesystem::path& dir);
CompositeSample read_bundle(const std::filesystem::path& dir);

// Helpers shared by the readers.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mudikit
