#include "mudikit/core.hpp"

#include <algorithm>
#include <cmath>

#include "mudikit/error.hpp"

namespace mudikit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::degenerate_size: return "degenerate_size";
    case ErrorCode::empty_mask: return "empty_mask";
    case ErrorCode::does_not_fit: return "does_not_fit";
    case ErrorCode::pool_exhausted: return "pool_exhausted";
    case ErrorCode::contract: return "contract";
    case ErrorCode::validation: return "validation";
    case ErrorCode::format: return "format";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::metadata: return "metadata";
    case ErrorCode::strict_schema: return "strict_schema";
    case ErrorCode::statistic_undefined: return "statistic_undefined";
    case ErrorCode::schedule: return "schedule";
    case ErrorCode::determinism: return "determinism";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::schedule:
    case ErrorCode::determinism:
    case ErrorCode::io:
      return false;
    default:
      return true;
  }
}

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  require(height > 0 && width > 0, ErrorCode::parameter, "image dimensions must be positive");
  require(channels == 1 || channels == 3, ErrorCode::parameter, "image channels must be 1 or 3");
  require(fill >= 0.0f && fill <= 1.0f, ErrorCode::parameter, "fill intensity outside [0,1]");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  require(height > 0 && width > 0, ErrorCode::parameter, "image dimensions must be positive");
  require(channels == 1 || channels == 3, ErrorCode::parameter, "image channels must be 1 or 3");
  require(data_.size() == static_cast<std::size_t>(height) * width * channels,
          ErrorCode::contract, "image data length does not match dimensions");
  for (float v : data_)
    require(v >= 0.0f && v <= 1.0f, ErrorCode::parameter, "image intensity outside [0,1]");
}

Mask::Mask(int height, int width, std::uint8_t fill) : height_(height), width_(width) {
  require(height > 0 && width > 0, ErrorCode::parameter, "mask dimensions must be positive");
  require(fill <= 1, ErrorCode::parameter, "mask values must be 0 or 1");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

Mask::Mask(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  require(height > 0 && width > 0, ErrorCode::parameter, "mask dimensions must be positive");
  require(data_.size() == static_cast<std::size_t>(height) * width, ErrorCode::contract,
          "mask data length does not match dimensions");
  for (auto v : data_) require(v <= 1, ErrorCode::parameter, "mask values must be 0 or 1");
}

std::size_t Mask::count_nonzero() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

void SegmentedSubject::validate() const {
  require(image.height() == mask.height() && image.width() == mask.width(), ErrorCode::contract,
          "subject '" + identifier + "': image and mask sizes differ");
  require(mask.count_nonzero() > 0, ErrorCode::empty_mask,
          "subject '" + identifier + "': mask is empty");
}

int scaled_extent(int extent, double scale) {
  return static_cast<int>(std::floor(extent * scale + 0.5));
}

Image resize_bilinear(const Image& image, int height, int width) {
  require(height > 0 && width > 0, ErrorCode::degenerate_size, "resize target below 1 pixel");
  if (height == image.height() && width == image.width()) return image;
  const int channels = image.channels();
  Image out(height, width, channels);
  const double sy = static_cast<double>(image.height()) / height;
  const double sx = static_cast<double>(image.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top = image.at(y0, x0, c) * (1.0 - wx) + image.at(y0, x1, c) * wx;
        const double bottom = image.at(y1, x0, c) * (1.0 - wx) + image.at(y1, x1, c) * wx;
        const double v = top * (1.0 - wy) + bottom * wy;
        out.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

Mask resize_nearest(const Mask& mask, int height, int width) {
  require(height > 0 && width > 0, ErrorCode::degenerate_size, "resize target below 1 pixel");
  if (height == mask.height() && width == mask.width()) return mask;
  Mask out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(static_cast<int>((y + 0.5) * mask.height() / height), mask.height() - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(static_cast<int>((x + 0.5) * mask.width() / width), mask.width() - 1);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

SegmentedSubject resize_subject_to(const SegmentedSubject& subject, int height, int width) {
  require(height >= 1 && width >= 1, ErrorCode::degenerate_size,
          "subject '" + subject.identifier + "' resized below 1 pixel");
  SegmentedSubject out{resize_bilinear(subject.image, height, width),
                       resize_nearest(subject.mask, height, width), subject.identifier,
                       subject.class_text};
  require(out.mask.count_nonzero() > 0, ErrorCode::degenerate_size,
          "subject '" + subject.identifier + "' mask vanished after resize");
  return out;
}

SegmentedSubject resize_subject(const SegmentedSubject& subject, double scale) {
  require(scale > 0.0 && scale <= 8.0, ErrorCode::parameter, "resize scale outside (0, 8]");
  return resize_subject_to(subject, scaled_extent(subject.image.height(), scale),
                           scaled_extent(subject.image.width(), scale));
}

LayoutBox bounding_box(const Mask& mask) {
  int min_x = mask.width(), min_y = mask.height(), max_x = -1, max_y = -1;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(y, x)) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
      }
  require(max_x >= 0, ErrorCode::empty_mask, "bounding_box of an empty mask");
  return LayoutBox{0, min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

void paste_subject(Image& canvas, Mask& canvas_mask, const SegmentedSubject& subject, int x,
                   int y) {
  const Image& src = subject.image;
  require(canvas.height() == canvas_mask.height() && canvas.width() == canvas_mask.width(),
          ErrorCode::contract, "canvas image and mask sizes differ");
  require(src.channels() == canvas.channels() || src.channels() == 1, ErrorCode::contract,
          "subject channel count incompatible with canvas");
  const int y_begin = std::max(0, -y), y_end = std::min(src.height(), canvas.height() - y);
  const int x_begin = std::max(0, -x), x_end = std::min(src.width(), canvas.width() - x);
  for (int sy = y_begin; sy < y_end; ++sy)
    for (int sx = x_begin; sx < x_end; ++sx) {
      if (!subject.mask.at(sy, sx)) continue;
      for (int c = 0; c < canvas.channels(); ++c)
        canvas.at(y + sy, x + sx, c) = src.at(sy, sx, src.channels() == 1 ? 0 : c);
      canvas_mask.at(y + sy, x + sx) = 1;
    }
}

}  // namespace mudikit
