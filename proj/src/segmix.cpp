#include "mudikit/segmix.hpp"

#include <algorithm>
#include <map>

#include "mudikit/error.hpp"

namespace mudikit {

namespace {

constexpr std::string_view kIdsSlot = "{ids}";

void require_pair(std::span<const SegmentedSubject> subjects) {
  require(!subjects.empty(), ErrorCode::parameter, "no subjects given");
  require(subjects.size() == 2, ErrorCode::parameter, "composition takes exactly 2 subjects");
  for (const auto& s : subjects) s.validate();
}

}  // namespace

std::string PromptTemplate::render(std::span<const std::string> identifiers) const {
  std::string ids;
  for (std::size_t i = 0; i < identifiers.size(); ++i) {
    if (i > 0) ids += (i + 1 == identifiers.size()) ? " and " : ", ";
    ids += identifiers[i];
  }
  std::string out = composite_template;
  const auto slot = out.find(kIdsSlot);
  require(slot != std::string::npos, ErrorCode::parameter, "prompt template lacks {ids}");
  out.replace(slot, kIdsSlot.size(), ids);
  if (prefix_count) out = std::to_string(identifiers.size()) + " " + count_noun + ": " + out;
  return out;
}

void PromptTemplate::validate() const {
  const auto first = composite_template.find(kIdsSlot);
  require(first != std::string::npos &&
              composite_template.find(kIdsSlot, first + 1) == std::string::npos,
          ErrorCode::parameter, "prompt template must contain exactly one {ids} slot");
}

void SegMixConfig::validate() const {
  require(out_height >= 8 && out_width >= 8, ErrorCode::parameter, "out_size below 8 pixels");
  require(max_margin >= 0, ErrorCode::parameter, "max_margin must be nonnegative");
  require(seg_mix_prob >= 0.0 && seg_mix_prob <= 1.0, ErrorCode::parameter,
          "seg_mix_prob outside [0,1]");
  require(random_scale_min > 0.0 && random_scale_min <= random_scale_max &&
              random_scale_max <= 1.0,
          ErrorCode::parameter, "random scale range must satisfy 0 < min <= max <= 1");
  require(background_value >= 0.0f && background_value <= 1.0f, ErrorCode::parameter,
          "background_value outside [0,1]");
  if (scales)
    for (double s : *scales) require(s > 0.0, ErrorCode::parameter, "scales must be positive");
  prompt.validate();
}

double max_fit_scale(const SegmentedSubject& subject, int canvas_height, int canvas_width) {
  const double fit = std::min(static_cast<double>(canvas_height) / subject.image.height(),
                              static_cast<double>(canvas_width) / subject.image.width());
  return std::min(fit, 8.0);
}

SegMixDraws draw_seg_mix(std::span<const SegmentedSubject> subjects, const SegMixConfig& config,
                         RandomSource& rng) {
  require_pair(subjects);
  config.validate();
  SegMixDraws draws;
  if (config.scales) {
    require(config.scales->size() == subjects.size(), ErrorCode::parameter,
            "scales length must equal subject count");
    draws.scales = *config.scales;
  } else {
    for (const auto& s : subjects)
      draws.scales.push_back(rng.uniform(config.random_scale_min, config.random_scale_max) *
                             max_fit_scale(s, config.out_height, config.out_width));
  }
  draws.swapped = rng.bernoulli(SegMixConfig::swap_prob);
  for (int& m : draws.margins) m = static_cast<int>(rng.uniform_int(0, config.max_margin));
  for (int k = 0; k < 2; ++k) {
    const auto& s = subjects[draws.swapped ? 1 - k : k];
    const double scale = draws.scales[draws.swapped ? 1 - k : k];
    const int h = scaled_extent(s.image.height(), scale);
    draws.offsets_y[k] = static_cast<int>(rng.uniform_int(0, std::max(0, config.out_height - h)));
  }
  return draws;
}

CompositeSample compose_seg_mix(std::span<const SegmentedSubject> subjects,
                                const SegMixConfig& config, const SegMixDraws& draws) {
  require_pair(subjects);
  config.validate();
  require(draws.scales.size() == 2, ErrorCode::contract, "draws must carry 2 scales");

  std::vector<SegmentedSubject> resized;
  for (std::size_t i = 0; i < 2; ++i) {
    auto r = resize_subject(subjects[i], draws.scales[i]);
    require(r.image.height() <= config.out_height && r.image.width() <= config.out_width,
            ErrorCode::does_not_fit,
            "subject '" + r.identifier + "' does not fit the canvas after scaling");
    resized.push_back(std::move(r));
  }
  if (draws.swapped) std::swap(resized[0], resized[1]);

  const int channels =
      std::max(resized[0].image.channels(), resized[1].image.channels());
  CompositeSample out{Image(config.out_height, config.out_width, channels, config.background_value),
                      Mask(config.out_height, config.out_width), {}, {}, {}};
  for (int k = 0; k < 2; ++k) {
    const auto& s = resized[k];
    const int w = s.image.width(), h = s.image.height();
    // A margin wider than the free space slides the subject back onto the canvas.
    const int x = k == 0 ? std::min(draws.margins[0], config.out_width - w)
                         : std::max(0, config.out_width - w - draws.margins[1]);
    const int y = std::clamp(draws.offsets_y[k], 0, config.out_height - h);
    paste_subject(out.image, out.mask, s, x, y);
    const int source_index = draws.swapped ? 1 - k : k;
    out.layout.push_back(LayoutBox{source_index, x, y, w, h});
    out.subject_identifiers.push_back(s.identifier);
  }
  out.prompt = config.prompt.render(out.subject_identifiers);
  return out;
}

CompositeSample create_seg_mix(std::span<const SegmentedSubject> subjects,
                               const SegMixConfig& config, RandomSource& rng) {
  return compose_seg_mix(subjects, config, draw_seg_mix(subjects, config, rng));
}

CompositeSample cutmix_compose(std::span<const SegmentedSubject> subjects,
                               const SegMixConfig& config, RandomSource& rng,
                               std::optional<int> boundary) {
  require_pair(subjects);
  config.validate();
  const int h = config.out_height, w = config.out_width;
  const bool swapped = rng.bernoulli(SegMixConfig::swap_prob);
  const int split = boundary ? *boundary : static_cast<int>(rng.uniform_int(1, w - 1));
  require(split >= 1 && split <= w - 1, ErrorCode::parameter, "cut-mix boundary outside canvas");

  const SegmentedSubject& left = subjects[swapped ? 1 : 0];
  const SegmentedSubject& right = subjects[swapped ? 0 : 1];
  const int channels = std::max(left.image.channels(), right.image.channels());
  CompositeSample out{Image(h, w, channels), Mask(h, w, 1), {}, {}, {}};

  // Each side is a centred crop of the subject image stretched to the canvas.
  auto fill = [&](const SegmentedSubject& s, int x_begin, int x_end) {
    const Image full = resize_bilinear(s.image, h, w);
    const int crop_width = x_end - x_begin;
    const int crop_left = (w - crop_width) / 2;
    for (int y = 0; y < h; ++y)
      for (int x = x_begin; x < x_end; ++x)
        for (int c = 0; c < channels; ++c)
          out.image.at(y, x, c) =
              full.at(y, crop_left + (x - x_begin), full.channels() == 1 ? 0 : c);
  };
  fill(left, 0, split);
  fill(right, split, w);
  out.layout = {LayoutBox{swapped ? 1 : 0, 0, 0, split, h},
                LayoutBox{swapped ? 0 : 1, split, 0, w - split, h}};
  out.subject_identifiers = {left.identifier, right.identifier};
  out.prompt = config.prompt.render(out.subject_identifiers);
  return out;
}

AugmentResult augment_sample(const TrainingSample& sample, std::span<const SegmentedSubject> pool,
                             const SegMixConfig& config, RandomSource& rng) {
  config.validate();
  if (!rng.bernoulli(config.seg_mix_prob))
    return AugmentResult{sample.subject.image, sample.prompt, false};

  std::map<std::string, std::vector<const SegmentedSubject*>> by_class;
  for (const auto& s : pool)
    if (s.class_text != sample.subject.class_text) by_class[s.class_text].push_back(&s);
  require(!by_class.empty(), ErrorCode::pool_exhausted,
          "no subject of a class other than '" + sample.subject.class_text + "' in the pool");

  auto cls = by_class.begin();
  std::advance(cls, rng.uniform_int(0, static_cast<std::int64_t>(by_class.size()) - 1));
  const auto& members = cls->second;
  const SegmentedSubject& other =
      *members[rng.uniform_int(0, static_cast<std::int64_t>(members.size()) - 1)];

  const SegmentedSubject pair[2] = {sample.subject, other};
  CompositeSample composite = create_seg_mix(pair, config, rng);
  return AugmentResult{std::move(composite.image), std::move(composite.prompt), true};
}

std::vector<CompositeSample> build_prior_set(std::span<const SegmentedSubject> priors, int count,
                                             const SegMixConfig& config, RandomSource& rng) {
  require(priors.size() >= 2, ErrorCode::parameter, "prior set needs at least 2 subjects");
  require(count >= 1, ErrorCode::parameter, "prior composite count must be at least 1");
  const auto n = static_cast<std::int64_t>(priors.size());
  std::vector<CompositeSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const auto a = rng.uniform_int(0, n - 1);
    auto b = rng.uniform_int(0, n - 2);
    if (b >= a) ++b;
    // Prior prompts use class nouns instead of identifier tokens.
    SegmentedSubject pair[2] = {priors[a], priors[b]};
    for (auto& s : pair) s.identifier = s.class_text;
    out.push_back(create_seg_mix(pair, config, rng));
  }
  return out;
}

}  // namespace mudikit
