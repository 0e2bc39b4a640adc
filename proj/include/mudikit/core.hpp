#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mudikit {

/// Row-major image with interleaved channels and intensities in [0, 1].
class Image {
 public:
  Image() = default;
  /// Constant-filled image.
  Image(int height, int width, int channels, float fill = 0.0f);
  /// Takes ownership of `data`; validates length and range.
  Image(int height, int width, int channels, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }

  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }
  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }

  std::span<const float> pixels() const noexcept { return data_; }
  std::span<float> pixels() noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Row-major binary mask, one byte per pixel holding 0 or 1.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, std::uint8_t fill = 0);
  Mask(int height, int width, std::vector<std::uint8_t> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }

  std::uint8_t at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::size_t count_nonzero() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

struct SegmentedSubject {
  Image image;
  Mask mask;
  std::string identifier;  // the rare-token identifier, e.g. "olis"
  std::string class_text;  // descriptive class noun

  /// Throws unless image and mask agree in size and the mask is non-empty.
  void validate() const;

  friend bool operator==(const SegmentedSubject&, const SegmentedSubject&) = default;
};

/// Placement of one subject on a canvas. May extend past the canvas; pasting
/// clips.
struct LayoutBox {
  int subject_index = 0;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  int right() const noexcept { return x + width; }
  int bottom() const noexcept { return y + height; }

  friend bool operator==(const LayoutBox&, const LayoutBox&) = default;
};

/// round-half-up of extent * scale.
int scaled_extent(int extent, double scale);

/// Uniform rescale: bilinear for the image (clamped to [0,1]), nearest
/// neighbour for the mask. scale must lie in (0, 8].
SegmentedSubject resize_subject(const SegmentedSubject& subject, double scale);

/// Rescale to an explicit size, used when a layout box dictates the extent.
SegmentedSubject resize_subject_to(const SegmentedSubject& subject, int height, int width);

Image resize_bilinear(const Image& image, int height, int width);
Mask resize_nearest(const Mask& mask, int height, int width);

/// Tight box around nonzero pixels (subject_index 0).
LayoutBox bounding_box(const Mask& mask);

/// Copies subject pixels under its mask onto the canvas with top-left at
/// (x, y), clipping to the canvas. Later pastes overwrite earlier ones.
/// Grayscale subjects are broadcast onto colour canvases.
void paste_subject(Image& canvas, Mask& canvas_mask, const SegmentedSubject& subject, int x,
                   int y);

}  // namespace mudikit
