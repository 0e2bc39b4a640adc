#include "mudikit/sprites.hpp"

#include <algorithm>
#include <cmath>

#include "mudikit/error.hpp"

namespace mudikit {

void SpriteSpec::validate() const {
  require(canvas_height > 0 && canvas_width > 0, ErrorCode::parameter,
          "sprite canvas must be positive");
  require(size >= 1 && size < std::min(canvas_height, canvas_width), ErrorCode::parameter,
          "sprite size must be positive and below the canvas dimensions");
  for (float c : color)
    require(c >= 0.0f && c <= 1.0f, ErrorCode::parameter, "sprite colour outside [0,1]");
  require(texture >= 0.0f && texture <= 1.0f, ErrorCode::parameter,
          "sprite texture outside [0,1]");
}

namespace {

bool inside(const SpriteSpec& spec, int y, int x) {
  const double cy = spec.canvas_height / 2.0, cx = spec.canvas_width / 2.0;
  const double py = y + 0.5, px = x + 0.5;
  const double half = spec.size / 2.0;
  switch (spec.shape) {
    case SpriteShape::disk:
      return (px - cx) * (px - cx) + (py - cy) * (py - cy) <= half * half;
    case SpriteShape::square: {
      const int top = (spec.canvas_height - spec.size) / 2;
      const int left = (spec.canvas_width - spec.size) / 2;
      return y >= top && y < top + spec.size && x >= left && x < left + spec.size;
    }
    case SpriteShape::triangle: {
      const double top = cy - half, bottom = cy + half;
      if (py < top || py > bottom) return false;
      // Half-width grows linearly from 0 at the apex to size/2 at the base.
      const double reach = half * (py - top) / spec.size;
      return std::abs(px - cx) <= reach;
    }
  }
  return false;
}

}  // namespace

std::vector<SegmentedSubject> gen_sprites(std::span<const SpriteSpec> specs, RandomSource& rng) {
  std::vector<SegmentedSubject> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    spec.validate();
    Image image(spec.canvas_height, spec.canvas_width, 3, 1.0f);
    Mask mask(spec.canvas_height, spec.canvas_width);
    for (int y = 0; y < spec.canvas_height; ++y)
      for (int x = 0; x < spec.canvas_width; ++x) {
        if (!inside(spec, y, x)) continue;
        mask.at(y, x) = 1;
        for (int c = 0; c < 3; ++c) {
          float v = spec.color[c];
          if (spec.texture > 0.0f)
            v += static_cast<float>(rng.uniform(-spec.texture, spec.texture));
          image.at(y, x, c) = std::clamp(v, 0.0f, 1.0f);
        }
      }
    SegmentedSubject subject{std::move(image), std::move(mask), spec.identifier, spec.class_text};
    require(subject.mask.count_nonzero() > 0, ErrorCode::parameter, "sprite rasterized to nothing");
    out.push_back(std::move(subject));
  }
  return out;
}

DetectionRecord detect_components(const Image& image, double threshold,
                                  const std::string& image_id) {
  require(threshold > 0.0 && threshold < 1.0, ErrorCode::parameter,
          "detection threshold must lie in (0,1)");
  const int h = image.height(), w = image.width();
  std::vector<std::uint8_t> on(static_cast<std::size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float peak = 0.0f;
      for (int c = 0; c < image.channels(); ++c) peak = std::max(peak, image.at(y, x, c));
      on[static_cast<std::size_t>(y) * w + x] = peak > threshold;
    }

  DetectionRecord record{image_id, {}, DetectionSource::component_detector};
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (!on[start]) continue;
    on[start] = 0;
    stack.assign(1, start);
    int count = 0, x0 = w, y0 = h, x1 = -1, y1 = -1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int y = p / w, x = p % w;
      ++count;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      const int neighbours[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
      for (const auto& [ny, nx] : neighbours) {
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const int q = ny * w + nx;
        if (on[q]) {
          on[q] = 0;
          stack.push_back(q);
        }
      }
    }
    if (count >= 9)
      record.boxes.push_back(DetectionBox{"object", x0, y0, x1 + 1, y1 + 1,
                                          static_cast<double>(count) / (static_cast<double>(h) * w)});
  }
  return record;
}

EmbeddingSet proxy_embed(const Image& image, const LayoutBox& box, const std::string& subject_id) {
  require(box.width > 0 && box.height > 0, ErrorCode::contract, "proxy_embed: degenerate box");
  require(box.x >= 0 && box.y >= 0 && box.right() <= image.width() &&
              box.bottom() <= image.height(),
          ErrorCode::contract, "proxy_embed: box outside the image");
  const int channels = image.channels();
  Image crop(box.height, box.width, channels);
  for (int y = 0; y < box.height; ++y)
    for (int x = 0; x < box.width; ++x)
      for (int c = 0; c < channels; ++c) crop.at(y, x, c) = image.at(box.y + y, box.x + x, c);
  const Image small = resize_bilinear(crop, 16, 16);

  std::vector<double> features(kProxyEmbeddingDim, 0.0);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = small.at(y, x, channels == 1 ? 0 : c);
        const int bin = std::min(7, static_cast<int>(v * 8.0));
        features[c * 8 + bin] += 1.0 / 256.0;
        features[24 + ((y / 4) * 4 + x / 4) * 3 + c] += v / 16.0;
      }
  return EmbeddingSet::normalized(subject_id, kProxyEmbeddingDim, std::move(features));
}

}  // namespace mudikit
