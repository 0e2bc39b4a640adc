#include "mudikit/init.hpp"

#include <algorithm>
#include <numeric>

#include "mudikit/error.hpp"
#include "mudikit/io.hpp"
#include "mudikit/kernels.hpp"

namespace mudikit {

AveragePoolEncoder::AveragePoolEncoder(int factor) : factor_(factor) {
  require(factor >= 1, ErrorCode::parameter, "downscale factor must be at least 1");
}

LatentGrid AveragePoolEncoder::encode(const Image& image) const {
  require(image.height() % factor_ == 0 && image.width() % factor_ == 0, ErrorCode::contract,
          "image size is not divisible by the downscale factor");
  const int h = image.height() / factor_, w = image.width() / factor_, c = image.channels();
  LatentGrid out(h, w, c);
  const double inv = 1.0 / (static_cast<double>(factor_) * factor_);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int k = 0; k < c; ++k) out.at(y / factor_, x / factor_, k) += image.at(y, x, k);
  for (double& v : out.values()) v *= inv;
  return out;
}

FileBackedEncoder::FileBackedEncoder(LatentGrid latent, int factor)
    : latent_(std::move(latent)), factor_(factor) {
  require(factor >= 1, ErrorCode::parameter, "downscale factor must be at least 1");
}

FileBackedEncoder FileBackedEncoder::from_file(const std::filesystem::path& path, int factor) {
  return FileBackedEncoder(read_latent(path), factor);
}

LatentGrid FileBackedEncoder::encode(const Image& image) const {
  require(image.height() == latent_.height() * factor_ && image.width() == latent_.width() * factor_,
          ErrorCode::contract, "stored latent does not match the image size");
  return latent_;
}

void InitConfig::validate() const {
  require(gamma >= 0.0, ErrorCode::parameter, "gamma must be nonnegative");
  require(canvas_height >= 8 && canvas_width >= 8, ErrorCode::parameter, "canvas below 8 pixels");
  require(max_margin >= 0, ErrorCode::parameter, "max_margin must be nonnegative");
  require(downscale_factor >= 1, ErrorCode::parameter, "downscale factor must be at least 1");
}

double recommended_gamma(std::size_t subject_count) { return subject_count > 3 ? 3.0 : 2.0; }

std::vector<LayoutBox> random_layout(std::span<const SegmentedSubject> subjects, int canvas_height,
                                     int canvas_width, int max_margin, RandomSource& rng) {
  require(!subjects.empty(), ErrorCode::parameter, "no subjects given");
  require(max_margin >= 0, ErrorCode::parameter, "max_margin must be nonnegative");
  for (const auto& s : subjects) {
    s.validate();
    require(s.image.height() <= canvas_height && s.image.width() <= canvas_width,
            ErrorCode::does_not_fit, "subject '" + s.identifier + "' does not fit the canvas");
  }
  const auto n = subjects.size();
  auto draw_y = [&](const SegmentedSubject& s) {
    return static_cast<int>(rng.uniform_int(0, canvas_height - s.image.height()));
  };
  std::vector<LayoutBox> boxes;

  if (n == 1) {
    const auto& s = subjects[0];
    const int x = static_cast<int>(rng.uniform_int(0, canvas_width - s.image.width()));
    boxes.push_back({0, x, draw_y(s), s.image.width(), s.image.height()});
    return boxes;
  }

  if (n == 2) {
    const bool swapped = rng.bernoulli(0.5);
    int margins[2];
    for (int& m : margins) m = static_cast<int>(rng.uniform_int(0, max_margin));
    const int first = swapped ? 1 : 0, second = 1 - first;
    const auto& left = subjects[first];
    const auto& right = subjects[second];
    boxes.push_back({first, margins[0], draw_y(left), left.image.width(), left.image.height()});
    boxes.push_back({second, canvas_width - right.image.width() - margins[1], draw_y(right),
                     right.image.width(), right.image.height()});
    return boxes;
  }

  // Random slot assignment generalizes the pairwise order swap.
  std::vector<std::size_t> slot_of(n);
  std::iota(slot_of.begin(), slot_of.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(slot_of[i], slot_of[rng.uniform_int(0, static_cast<std::int64_t>(i))]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = subjects[i];
    const int slot_left = static_cast<int>(canvas_width * slot_of[i] / n);
    const int slot_right = static_cast<int>(canvas_width * (slot_of[i] + 1) / n);
    const int slot_width = slot_right - slot_left;
    const int w = s.image.width();
    int x;
    if (w <= slot_width) {
      const int slack = std::min(slot_width - w, max_margin);
      x = slot_left + static_cast<int>(rng.uniform_int(0, slack));
    } else {
      x = slot_left + (slot_width - w) / 2;
    }
    boxes.push_back({static_cast<int>(i), x, draw_y(s), w, s.image.height()});
  }
  return boxes;
}

void validate_layout(const LlmLayout& layout) {
  require(layout.canvas_height > 0 && layout.canvas_width > 0, ErrorCode::validation,
          "layout canvas must be positive");
  require(!layout.boxes.empty(), ErrorCode::validation, "layout has no boxes");
  for (std::size_t i = 0; i < layout.boxes.size(); ++i) {
    const auto& b = layout.boxes[i];
    const std::string where = "layout box " + std::to_string(i) + " {x=" + std::to_string(b.x) +
                              ",y=" + std::to_string(b.y) + ",w=" + std::to_string(b.width) +
                              ",h=" + std::to_string(b.height) + "}";
    require(b.width > 0 && b.height > 0, ErrorCode::validation, where + " has a non-positive extent");
    require(b.x >= 0 && b.y >= 0 && b.right() <= layout.canvas_width &&
                b.bottom() <= layout.canvas_height,
            ErrorCode::validation, where + " lies outside the canvas");
    require(b.subject_index >= 0, ErrorCode::validation, where + " has a negative subject index");
  }
}

LlmLayout load_llm_layout(const std::filesystem::path& path,
                          std::span<const std::string> identifiers) {
  LlmLayout layout = read_layout_json(path, identifiers);
  validate_layout(layout);
  return layout;
}

PreparedInit prepare_initialization(std::span<const SegmentedSubject> subjects,
                                    std::span<const LayoutBox> layout, const Encoder& encoder,
                                    int canvas_height, int canvas_width) {
  require(!subjects.empty(), ErrorCode::parameter, "no subjects given");
  require(layout.size() == subjects.size(), ErrorCode::contract,
          "layout length differs from subject count");
  const int f = encoder.downscale_factor();
  require(canvas_height % f == 0 && canvas_width % f == 0, ErrorCode::contract,
          "encoder downscale factor does not divide the canvas");
  int channels = 1;
  for (const auto& s : subjects) channels = std::max(channels, s.image.channels());

  PreparedInit prepared{Image(canvas_height, canvas_width, channels),
                        Mask(canvas_height, canvas_width), {}, {}};
  for (const auto& box : layout) {
    require(box.subject_index >= 0 && static_cast<std::size_t>(box.subject_index) < subjects.size(),
            ErrorCode::contract, "layout references an unknown subject");
    const auto& s = subjects[box.subject_index];
    if (s.image.height() == box.height && s.image.width() == box.width)
      paste_subject(prepared.composite, prepared.composite_mask, s, box.x, box.y);
    else
      paste_subject(prepared.composite, prepared.composite_mask,
                    resize_subject_to(s, box.height, box.width), box.x, box.y);
  }

  LatentGrid latent = encoder.encode(prepared.composite);
  require(latent.height() == canvas_height / f && latent.width() == canvas_width / f,
          ErrorCode::contract, "encoder output size violates its downscale factor");
  prepared.latent_mask = resize_nearest(prepared.composite_mask, latent.height(), latent.width());
  for (int y = 0; y < latent.height(); ++y)
    for (int x = 0; x < latent.width(); ++x)
      if (!prepared.latent_mask.at(y, x))
        for (int c = 0; c < latent.channels(); ++c) latent.at(y, x, c) = 0.0;
  prepared.masked_latent = std::move(latent);
  return prepared;
}

InitResult initial_latent(const PreparedInit& prepared, const InitConfig& config,
                          const LatentGrid& noise, const NoiseSchedule* schedule) {
  config.validate();
  const LatentGrid& m = prepared.masked_latent;
  require(noise.same_shape(m), ErrorCode::contract, "noise shape differs from the latent");
  InitResult result{LatentGrid(m.height(), m.width(), m.channels()),
                    config.gamma >= kSaturationGamma};
  if (config.variant == InitVariant::mean_shift) {
    kernels::axpby(config.gamma, m.values(), 1.0, noise.values(), result.latent.values());
  } else {
    require(schedule != nullptr, ErrorCode::parameter,
            "forward_noise initialization needs a noise schedule");
    const int T = schedule->steps();
    kernels::axpby(schedule->alpha(T) * config.gamma, m.values(), schedule->sigma(T),
                   noise.values(), result.latent.values());
  }
  return result;
}

InitResult latent_initialize(std::span<const SegmentedSubject> subjects,
                             std::span<const LayoutBox> layout, const Encoder& encoder,
                             const InitConfig& config, RandomSource& rng,
                             const NoiseSchedule* schedule) {
  config.validate();
  const PreparedInit prepared =
      prepare_initialization(subjects, layout, encoder, config.canvas_height, config.canvas_width);
  LatentGrid noise(prepared.masked_latent.height(), prepared.masked_latent.width(),
                   prepared.masked_latent.channels());
  rng.fill_normal(noise.values());
  return initial_latent(prepared, config, noise, schedule);
}

}  // namespace mudikit
