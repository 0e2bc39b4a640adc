#include <set>

#include "doctest.h"
#include "mudikit/error.hpp"
#include "mudikit/segmix.hpp"
#include "support.hpp"

using namespace mudikit;
using namespace testing;

namespace {

SegMixConfig small_config(int h, int w, int max_margin = 0) {
  SegMixConfig c;
  c.out_height = h;
  c.out_width = w;
  c.max_margin = max_margin;
  return c;
}

// Paints resized subjects in paste order by direct enumeration.
void check_against_paint_oracle(const std::vector<SegmentedSubject>& subjects, const SegMixConfig& config,
                                const CompositeSample& out) {
  Image expect(config.out_height, config.out_width, 3, config.background_value);
  Mask expect_mask(config.out_height, config.out_width);
  for (std::size_t k = 0; k < out.layout.size(); ++k) {
    const auto& box = out.layout[k];
    const auto& src = subjects[box.subject_index];
    const auto r = resize_subject_to(src, box.height, box.width);
    for (int y = 0; y < box.height; ++y)
      for (int x = 0; x < box.width; ++x) {
        const int cy = box.y + y, cx = box.x + x;
        if (cy < 0 || cx < 0 || cy >= config.out_height || cx >= config.out_width || !r.mask.at(y, x)) continue;
        for (int c = 0; c < 3; ++c) expect.at(cy, cx, c) = r.image.at(y, x, c);
        expect_mask.at(cy, cx) = 1;
      }
  }
  CHECK(out.image == expect);
  CHECK(out.mask == expect_mask);
}

}  // namespace

TEST_SUITE("segmix") {

TEST_CASE("two 4x4 subjects fill an 8x8 canvas side by side") {
  const std::vector<SegmentedSubject> subjects = {solid_subject(4, 4, 0.2f, "a"), solid_subject(4, 4, 0.8f, "b")};
  const auto config = small_config(8, 8);
  SegMixDraws draws;
  draws.scales = {1.0, 1.0};
  draws.swapped = false;
  const auto out = compose_seg_mix(subjects, config, draws);
  CHECK(out.mask.count_nonzero() == 32);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool top = y < 4;
      const float expect = !top ? 0.0f : (x < 4 ? 0.2f : 0.8f);
      CHECK(out.image.at(y, x, 0) == expect);
    }
  CHECK(out.layout[0] == LayoutBox{0, 0, 0, 4, 4});
  CHECK(out.layout[1] == LayoutBox{1, 4, 0, 4, 4});
}

TEST_CASE("margin 0 boxes touch the canvas edges") {
  RandomSource rng(8);
  auto config = small_config(32, 48);
  config.scales = std::vector<double>{1.0, 1.0};
  for (int i = 0; i < 50; ++i) {
    const std::vector<SegmentedSubject> subjects = {random_subject(10, 12, rng, "a"), random_subject(9, 7, rng, "b")};
    const auto out = create_seg_mix(subjects, config, rng);
    CHECK(out.layout[0].x == 0);
    CHECK(out.layout[1].right() == 48);
  }
}

TEST_CASE("margins wider than the free space keep subjects on the canvas") {
  const std::vector<SegmentedSubject> subjects = {solid_subject(4, 12, 0.3f, "a"), solid_subject(4, 10, 0.7f, "b")};
  auto config = small_config(8, 16, 10);
  config.scales = std::vector<double>{1.0, 1.0};
  SegMixDraws draws;
  draws.scales = {1.0, 1.0};
  draws.margins[0] = 9;
  draws.margins[1] = 9;
  const auto out = compose_seg_mix(subjects, config, draws);
  CHECK(out.layout[0].x == 4);
  CHECK(out.layout[1].x == 0);
  CHECK(out.mask.count_nonzero() == 4 * 16);
}

TEST_CASE("default prompt follows the training template") {
  SegMixConfig config;
  const std::vector<std::string> ids = {"olis", "bnha"};
  CHECK(config.prompt.render(ids) == "A photo of olis and bnha, simple background.");
  const std::vector<std::string> three = {"a", "b", "c"};
  CHECK(config.prompt.render(three) == "A photo of a, b and c, simple background.");
  PromptTemplate counted;
  counted.prefix_count = true;
  CHECK(counted.render(ids) == "2 objects: A photo of olis and bnha, simple background.");
}

TEST_CASE("prompt template needs exactly one slot") {
  PromptTemplate t;
  t.composite_template = "no slot";
  CHECK_THROWS_AS(t.validate(), Error);
  t.composite_template = "{ids} and {ids}";
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("config invariants") {
  SegMixConfig c;
  c.seg_mix_prob = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SegMixConfig{};
  c.out_height = 4;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SegMixConfig{};
  c.scales = std::vector<double>{1.0, -1.0};
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(SegMixConfig{}.seg_mix_prob == 0.3);
  CHECK(SegMixConfig::swap_prob == 0.5);
}

TEST_CASE("composition errors") {
  RandomSource rng(1);
  auto config = small_config(8, 8);
  const std::vector<SegmentedSubject> none;
  try {
    create_seg_mix(none, config, rng);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parameter);
  }
  config.scales = std::vector<double>{3.0, 1.0};
  const std::vector<SegmentedSubject> two = {solid_subject(4, 4, 1.0f), solid_subject(4, 4, 1.0f)};
  try {
    create_seg_mix(two, config, rng);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::does_not_fit);
  }
}

TEST_CASE("subject-pixel fidelity and background purity") {
  RandomSource rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<SegmentedSubject> subjects = {random_subject(static_cast<int>(rng.uniform_int(3, 20)), static_cast<int>(rng.uniform_int(3, 20)), rng, "a"),
                                                    random_subject(static_cast<int>(rng.uniform_int(3, 20)), static_cast<int>(rng.uniform_int(3, 20)), rng, "b")};
    auto config = small_config(24, 32, static_cast<int>(rng.uniform_int(0, 12)));
    config.background_value = trial % 2 ? 0.0f : 0.5f;
    CompositeSample out;
    try {
      out = create_seg_mix(subjects, config, rng);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::degenerate_size);
      continue;
    }
    check_against_paint_oracle(subjects, config, out);
  }
}

TEST_CASE("margin 0 with fitting widths gives disjoint boxes") {
  RandomSource rng(5);
  auto config = small_config(32, 32);
  config.scales = std::vector<double>{1.0, 1.0};
  for (int trial = 0; trial < 500; ++trial) {
    const int w0 = static_cast<int>(rng.uniform_int(1, 20));
    const int w1 = static_cast<int>(rng.uniform_int(1, 32 - w0));
    const std::vector<SegmentedSubject> subjects = {solid_subject(5, w0, 0.4f), solid_subject(6, w1, 0.6f)};
    const auto out = create_seg_mix(subjects, config, rng);
    const auto& a = out.layout[0];
    const auto& b = out.layout[1];
    CHECK(a.right() <= b.x);
    CHECK(out.mask.count_nonzero() == static_cast<std::size_t>(5 * w0 + 6 * w1));
  }
}

TEST_CASE("larger max margin never reduces the overlap rate") {
  const std::vector<SegmentedSubject> subjects = {solid_subject(8, 14, 0.4f), solid_subject(8, 14, 0.6f)};
  double previous = -1.0;
  for (int margin : {0, 2, 4, 8, 16}) {
    auto config = small_config(16, 32, margin);
    config.scales = std::vector<double>{1.0, 1.0};
    int overlaps = 0;
    for (int seed = 0; seed < 2000; ++seed) {
      RandomSource rng(seed);
      const auto out = create_seg_mix(subjects, config, rng);
      overlaps += out.layout[0].right() > out.layout[1].x;
    }
    const double rate = overlaps / 2000.0;
    CHECK(rate >= previous);
    previous = rate;
  }
  CHECK(previous > 0.0);
}

TEST_CASE("order swap happens half the time") {
  const std::vector<SegmentedSubject> subjects = {solid_subject(4, 4, 0.1f, "a"), solid_subject(4, 4, 0.9f, "b")};
  auto config = small_config(8, 16, 2);
  int swaps = 0;
  for (int seed = 0; seed < 10000; ++seed) {
    RandomSource rng(seed);
    swaps += create_seg_mix(subjects, config, rng).subject_identifiers[0] == "b";
  }
  CHECK(swaps / 10000.0 >= 0.48);
  CHECK(swaps / 10000.0 <= 0.52);
}

TEST_CASE("same seed gives the same composite") {
  RandomSource gen(4);
  const std::vector<SegmentedSubject> subjects = {random_subject(9, 9, gen, "a"), random_subject(7, 11, gen, "b")};
  const auto config = small_config(20, 30, 5);
  RandomSource r1(99), r2(99);
  CHECK(create_seg_mix(subjects, config, r1) == create_seg_mix(subjects, config, r2));
}

TEST_CASE("random scales stay within the configured fraction of the fitting scale") {
  RandomSource rng(6);
  const std::vector<SegmentedSubject> subjects = {solid_subject(10, 5, 0.5f), solid_subject(4, 8, 0.5f)};
  const auto config = small_config(40, 40);
  for (int i = 0; i < 200; ++i) {
    const auto d = draw_seg_mix(subjects, config, rng);
    for (int k = 0; k < 2; ++k) {
      const double fit = max_fit_scale(subjects[k], 40, 40);
      CHECK(d.scales[k] >= 0.6 * fit);
      CHECK(d.scales[k] < 1.0 * fit);
    }
  }
}

TEST_CASE("cut-mix with a forced midpoint boundary") {
  RandomSource rng(1);
  const std::vector<SegmentedSubject> subjects = {solid_subject(4, 4, 0.2f, "a"), solid_subject(4, 4, 0.8f, "b")};
  const auto out = cutmix_compose(subjects, small_config(8, 8), rng, 4);
  CHECK(out.layout[0].width == 4);
  CHECK(out.layout[1].width == 4);
  CHECK(out.layout[1].x == 4);
  CHECK(out.mask.count_nonzero() == 64);
}

TEST_CASE("cut-mix shows a seam exactly at the boundary") {
  const std::vector<SegmentedSubject> subjects = {solid_subject(6, 6, 0.1f, "a"), solid_subject(6, 6, 0.9f, "b")};
  for (int seed = 0; seed < 50; ++seed) {
    RandomSource rng(seed);
    const auto out = cutmix_compose(subjects, small_config(12, 16), rng);
    const int boundary = out.layout[1].x;
    std::vector<int> jumps;
    for (int x = 1; x < 16; ++x) {
      bool differs = false;
      for (int y = 0; y < 12; ++y) differs |= out.image.at(y, x, 0) != out.image.at(y, x - 1, 0);
      if (differs) jumps.push_back(x);
    }
    REQUIRE(jumps.size() == 1);
    CHECK(jumps[0] == boundary);
  }
}

TEST_CASE("augmentation probability extremes") {
  RandomSource gen(2);
  const TrainingSample sample{solid_subject(6, 6, 0.3f, "olis", "dog"), "A photo of olis."};
  const std::vector<SegmentedSubject> pool = {solid_subject(5, 5, 0.7f, "bnha", "cat")};
  auto config = small_config(16, 16, 1);
  config.seg_mix_prob = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    RandomSource rng(seed);
    const auto r = augment_sample(sample, pool, config, rng);
    CHECK_FALSE(r.augmented);
    CHECK(r.image == sample.subject.image);
    CHECK(r.prompt == sample.prompt);
  }
  config.seg_mix_prob = 1.0;
  for (int seed = 0; seed < 100; ++seed) {
    RandomSource rng(seed);
    const auto r = augment_sample(sample, pool, config, rng);
    CHECK(r.augmented);
    CHECK(r.image.height() == 16);
    CHECK(r.prompt.find("olis") != std::string::npos);
    CHECK(r.prompt.find("bnha") != std::string::npos);
  }
}

TEST_CASE("augmentation rate at 0.3") {
  const TrainingSample sample{solid_subject(4, 4, 0.3f, "olis", "dog"), "p"};
  const std::vector<SegmentedSubject> pool = {solid_subject(4, 4, 0.7f, "bnha", "cat"),
                                              solid_subject(4, 4, 0.5f, "same", "dog")};
  const auto config = small_config(8, 16, 1);
  RandomSource rng(2024);
  int fired = 0;
  for (int i = 0; i < 10000; ++i) fired += augment_sample(sample, pool, config, rng).augmented;
  CHECK(fired / 10000.0 >= 0.28);
  CHECK(fired / 10000.0 <= 0.32);
}

TEST_CASE("augmentation never mixes a subject with its own class") {
  const TrainingSample sample{solid_subject(4, 4, 0.3f, "olis", "dog"), "p"};
  const std::vector<SegmentedSubject> pool = {solid_subject(4, 4, 0.5f, "other_dog", "dog"),
                                              solid_subject(4, 4, 0.7f, "bnha", "cat")};
  auto config = small_config(8, 16, 1);
  config.seg_mix_prob = 1.0;
  for (int seed = 0; seed < 200; ++seed) {
    RandomSource rng(seed);
    CHECK(augment_sample(sample, pool, config, rng).prompt.find("other_dog") == std::string::npos);
  }
  const std::vector<SegmentedSubject> same_class = {pool[0]};
  RandomSource rng(1);
  try {
    augment_sample(sample, same_class, config, rng);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::pool_exhausted);
  }
}

TEST_CASE("prior set sizes and errors") {
  RandomSource rng(3);
  const std::vector<SegmentedSubject> priors = {solid_subject(4, 4, 0.2f, "p0", "dog"),
                                                solid_subject(4, 4, 0.6f, "p1", "cat"),
                                                solid_subject(4, 4, 0.9f, "p2", "can")};
  const auto config = small_config(8, 16, 1);
  CHECK_THROWS_AS(build_prior_set(priors, 0, config, rng), Error);
  CHECK(build_prior_set(priors, 1, config, rng).size() == 1);
  CHECK(build_prior_set(priors, 50, config, rng).size() == 50);
  const std::vector<SegmentedSubject> one = {priors[0]};
  try {
    build_prior_set(one, 3, config, rng);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parameter);
  }
}

TEST_CASE("two-subject prior pool puts both classes in every composite") {
  RandomSource rng(4);
  const std::vector<SegmentedSubject> priors = {solid_subject(4, 4, 0.2f, "p0", "dog"),
                                                solid_subject(4, 4, 0.6f, "p1", "cat")};
  const auto set = build_prior_set(priors, 200, small_config(8, 16, 1), rng);
  for (const auto& c : set) {
    const std::set<std::string> ids(c.subject_identifiers.begin(), c.subject_identifiers.end());
    CHECK(ids == std::set<std::string>{"dog", "cat"});
    CHECK(c.prompt.find("p0") == std::string::npos);
  }
}

}  // TEST_SUITE
