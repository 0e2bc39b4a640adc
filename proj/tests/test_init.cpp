#include <cmath>
#include <fstream>

#include "doctest.h"
#include "mudikit/error.hpp"
#include "mudikit/init.hpp"
#include "support.hpp"

using namespace mudikit;
using namespace testing;

namespace {

class CountingEncoder final : public Encoder {
 public:
  explicit CountingEncoder(int factor) : inner_(factor) {}
  int downscale_factor() const override { return inner_.downscale_factor(); }
  LatentGrid encode(const Image& image) const override {
    ++calls;
    return inner_.encode(image);
  }
  mutable int calls = 0;

 private:
  AveragePoolEncoder inner_;
};

InitConfig small_init(int h, int w, int factor, double gamma) {
  InitConfig c;
  c.canvas_height = h;
  c.canvas_width = w;
  c.downscale_factor = factor;
  c.gamma = gamma;
  return c;
}

std::vector<SegmentedSubject> pair_of_subjects(RandomSource& rng) {
  return {random_subject(8, 8, rng, "a", "dog"), random_subject(8, 12, rng, "b", "cat")};
}

std::vector<LayoutBox> fixed_layout() { return {{0, 0, 4, 8, 8}, {1, 20, 8, 12, 8}}; }

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("init") {

TEST_CASE("average pool encoder takes block means") {
  Image img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(y, x, 0) = static_cast<float>(y * 4 + x) / 16.0f;
  const auto z = AveragePoolEncoder(2).encode(img);
  REQUIRE(z.height() == 2);
  CHECK(z.at(0, 0, 0) == doctest::Approx((0 + 1 + 4 + 5) / 64.0));
  CHECK(z.at(1, 1, 0) == doctest::Approx((10 + 11 + 14 + 15) / 64.0));
  CHECK_THROWS_AS(AveragePoolEncoder(3).encode(img), Error);
}

TEST_CASE("one subject lands anywhere inside the canvas") {
  RandomSource rng(1);
  const std::vector<SegmentedSubject> one = {solid_subject(5, 7, 0.5f)};
  bool left = false, right = false;
  for (int i = 0; i < 500; ++i) {
    const auto b = random_layout(one, 20, 30, 1, rng);
    REQUIRE(b.size() == 1);
    CHECK(b[0].x >= 0);
    CHECK(b[0].right() <= 30);
    CHECK(b[0].bottom() <= 20);
    left |= b[0].x == 0;
    right |= b[0].right() == 30;
  }
  CHECK(left);
  CHECK(right);
}

TEST_CASE("two subjects with margin 0 are flush with both edges") {
  RandomSource rng(2);
  const std::vector<SegmentedSubject> two = {solid_subject(5, 7, 0.5f), solid_subject(6, 9, 0.5f)};
  for (int i = 0; i < 200; ++i) {
    const auto b = random_layout(two, 20, 30, 0, rng);
    CHECK(b[0].x == 0);
    CHECK(b[1].right() == 30);
    CHECK(b[0].subject_index != b[1].subject_index);
  }
}

TEST_CASE("four subjects keep their centres inside their slots") {
  const std::vector<SegmentedSubject> four = {solid_subject(6, 10, 0.1f), solid_subject(6, 12, 0.2f),
                                              solid_subject(6, 16, 0.3f), solid_subject(6, 5, 0.4f)};
  for (int seed = 0; seed < 1000; ++seed) {
    RandomSource rng(seed);
    const auto boxes = random_layout(four, 32, 64, 3, rng);
    std::vector<int> slots;
    for (const auto& b : boxes) {
      const double centre = b.x + b.width / 2.0;
      const int slot = static_cast<int>(centre / 16.0);
      CHECK(centre >= 16.0 * slot);
      CHECK(centre <= 16.0 * (slot + 1));
      slots.push_back(slot);
    }
    std::sort(slots.begin(), slots.end());
    CHECK(slots == std::vector<int>{0, 1, 2, 3});
  }
}

TEST_CASE("random layout rejects subjects larger than the canvas") {
  RandomSource rng(3);
  const std::vector<SegmentedSubject> big = {solid_subject(40, 4, 0.5f)};
  try {
    random_layout(big, 32, 32, 1, rng);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::does_not_fit);
  }
}

TEST_CASE("layout files") {
  const auto dir = temp_dir("init_layout");
  write_text(dir / "ok.json",
             R"({"canvas":[64,64],"boxes":[{"subject":0,"x":0,"y":0,"w":32,"h":32},)"
             R"({"h":32,"w":32,"y":16,"x":16,"subject":1}]})");
  const auto layout = load_llm_layout(dir / "ok.json");
  REQUIRE(layout.boxes.size() == 2);
  CHECK(layout.boxes[1] == LayoutBox{1, 16, 16, 32, 32});

  write_text(dir / "named.json", R"({"canvas":[64,64],"boxes":[{"subject":"bnha","x":1,"y":2,"w":3,"h":4}]})");
  const std::vector<std::string> ids = {"olis", "bnha"};
  CHECK(load_llm_layout(dir / "named.json", ids).boxes[0].subject_index == 1);

  auto code_of = [&](const std::string& body) {
    write_text(dir / "bad.json", body);
    try {
      load_llm_layout(dir / "bad.json");
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  CHECK(code_of(R"({"canvas":[64,64],"boxes":[]})") == ErrorCode::validation);
  CHECK(code_of(R"({"canvas":[64,64],"boxes":[{"subject":0,"x":0,"y":0,"w":0,"h":4}]})") == ErrorCode::validation);
  CHECK(code_of(R"({"canvas":[64,64],"boxes":[{"subject":0,"x":40,"y":0,"w":32,"h":4}]})") == ErrorCode::validation);
  CHECK(code_of(R"({"canvas":[64,64],"boxes":[)") == ErrorCode::format);

  write_text(dir / "bad.json", R"({"canvas":[64,64],"boxes":[{"subject":0,"x":40,"y":3,"w":32,"h":4}]})");
  try {
    load_llm_layout(dir / "bad.json");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("x=40") != std::string::npos);
  }
}

TEST_CASE("gamma 0 gives the seeded noise exactly") {
  RandomSource gen(4);
  const auto subjects = pair_of_subjects(gen);
  const AveragePoolEncoder enc(4);
  RandomSource rng(77), ref(77);
  const auto out = latent_initialize(subjects, fixed_layout(), enc, small_init(32, 32, 4, 0.0), rng);
  std::vector<double> noise(out.latent.size());
  ref.fill_normal(noise);
  CHECK(std::equal(noise.begin(), noise.end(), out.latent.values().begin()));
}

TEST_CASE("gamma 1 with zero noise is the gated latent") {
  RandomSource gen(5);
  const auto subjects = pair_of_subjects(gen);
  const AveragePoolEncoder enc(4);
  const auto prepared = prepare_initialization(subjects, fixed_layout(), enc, 32, 32);
  const LatentGrid zero(8, 8, 3);
  const auto out = initial_latent(prepared, small_init(32, 32, 4, 1.0), zero);
  CHECK(out.latent == prepared.masked_latent);
  CHECK_FALSE(out.saturation_warning);

  // Oracle: paint, average each 4x4 block, gate by the pixel at the block centre.
  Image canvas(32, 32, 3);
  Mask m(32, 32);
  for (const auto& b : fixed_layout()) paste_subject(canvas, m, subjects[b.subject_index], b.x, b.y);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (int dy = 0; dy < 4; ++dy)
          for (int dx = 0; dx < 4; ++dx) sum += canvas.at(4 * y + dy, 4 * x + dx, c);
        const double expect = m.at(4 * y + 2, 4 * x + 2) ? sum / 16.0 : 0.0;
        CHECK(out.latent.at(y, x, c) == doctest::Approx(expect).epsilon(1e-12));
      }
}

TEST_CASE("saturation flag from gamma 4") {
  RandomSource gen(6);
  const auto prepared = prepare_initialization(pair_of_subjects(gen), fixed_layout(), AveragePoolEncoder(4), 32, 32);
  const LatentGrid zero(8, 8, 3);
  CHECK(initial_latent(prepared, small_init(32, 32, 4, 4.0), zero).saturation_warning);
  CHECK_FALSE(initial_latent(prepared, small_init(32, 32, 4, 3.99), zero).saturation_warning);
}

TEST_CASE("linearity in gamma") {
  RandomSource gen(7);
  const auto prepared = prepare_initialization(pair_of_subjects(gen), fixed_layout(), AveragePoolEncoder(4), 32, 32);
  RandomSource rng(8);
  LatentGrid noise(8, 8, 3);
  rng.fill_normal(noise.values());
  for (double g1 : {0.0, 0.5, 1.0, 2.0}) {
    for (double g2 : {0.25, 1.5, 3.0, 4.0}) {
      const auto z1 = initial_latent(prepared, small_init(32, 32, 4, g1), noise).latent;
      const auto z2 = initial_latent(prepared, small_init(32, 32, 4, g2), noise).latent;
      for (std::size_t i = 0; i < z1.size(); ++i) {
        const double diff = z2.values()[i] - z1.values()[i];
        const double expect = (g2 - g1) * prepared.masked_latent.values()[i];
        // Two rounded products and sums: a few ulps of the larger operand.
        const double scale = std::max({std::abs(z1.values()[i]), std::abs(z2.values()[i]), 1.0});
        CHECK(std::abs(diff - expect) <= 8 * std::numeric_limits<double>::epsilon() * scale);
      }
    }
  }
}

TEST_CASE("encoding happens once per request") {
  RandomSource gen(9);
  const CountingEncoder enc(4);
  const auto prepared = prepare_initialization(pair_of_subjects(gen), fixed_layout(), enc, 32, 32);
  for (int seed = 0; seed < 20; ++seed)
    for (double g : {0.0, 1.0, 2.0}) {
      RandomSource rng(seed);
      LatentGrid noise(8, 8, 3);
      rng.fill_normal(noise.values());
      initial_latent(prepared, small_init(32, 32, 4, g), noise);
    }
  CHECK(enc.calls == 1);
  RandomSource rng(1);
  latent_initialize(pair_of_subjects(gen), fixed_layout(), enc, small_init(32, 32, 4, 1.0), rng);
  CHECK(enc.calls == 2);
}

TEST_CASE("cells outside the mask are pure noise") {
  RandomSource gen(10);
  const auto subjects = pair_of_subjects(gen);
  const AveragePoolEncoder enc(4);
  const auto prepared = prepare_initialization(subjects, fixed_layout(), enc, 32, 32);
  const auto schedule = make_schedule(1000);
  std::vector<std::size_t> outside;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (!prepared.latent_mask.at(y, x)) outside.push_back(static_cast<std::size_t>(y * 8 + x) * 3);
  REQUIRE(outside.size() > 10);
  for (auto variant : {InitVariant::mean_shift, InitVariant::forward_noise}) {
    auto config = small_init(32, 32, 4, 2.0);
    config.variant = variant;
    const int n = 10000;
    for (std::size_t cell : {outside.front(), outside.back()}) {
      double sum = 0.0, sq = 0.0;
      for (int seed = 0; seed < n; ++seed) {
        RandomSource rng(seed);
        const double v = latent_initialize(subjects, fixed_layout(), enc, config, rng, &schedule).latent.values()[cell];
        sum += v;
        sq += v * v;
      }
      const double mean = sum / n, var = sq / n - mean * mean;
      CHECK(std::abs(mean) < 0.05);
      CHECK(std::abs(var - 1.0) < 0.05);
    }
  }
}

TEST_CASE("forward noise variant scales by the terminal coefficients") {
  RandomSource gen(11);
  const auto prepared = prepare_initialization(pair_of_subjects(gen), fixed_layout(), AveragePoolEncoder(4), 32, 32);
  const auto schedule = make_schedule(100, ScheduleKind::linear);
  RandomSource rng(12);
  LatentGrid noise(8, 8, 3);
  rng.fill_normal(noise.values());
  auto config = small_init(32, 32, 4, 2.0);
  config.variant = InitVariant::forward_noise;
  const auto z = initial_latent(prepared, config, noise, &schedule).latent;
  const double a = std::sqrt(schedule.alpha_bar(100)), s = std::sqrt(1.0 - schedule.alpha_bar(100));
  for (std::size_t i = 0; i < z.size(); ++i)
    CHECK(z.values()[i] == doctest::Approx(a * 2.0 * prepared.masked_latent.values()[i] + s * noise.values()[i]).epsilon(1e-12));
  CHECK_THROWS_AS(initial_latent(prepared, config, noise), Error);
}

TEST_CASE("determinism and contract errors") {
  RandomSource gen(13);
  const auto subjects = pair_of_subjects(gen);
  const AveragePoolEncoder enc(4);
  RandomSource r1(5), r2(5);
  CHECK(latent_initialize(subjects, fixed_layout(), enc, small_init(32, 32, 4, 1.0), r1).latent ==
        latent_initialize(subjects, fixed_layout(), enc, small_init(32, 32, 4, 1.0), r2).latent);

  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  const std::vector<LayoutBox> short_layout = {fixed_layout()[0]};
  CHECK(code_of([&] { prepare_initialization(subjects, short_layout, enc, 32, 32); }) == ErrorCode::contract);
  CHECK(code_of([&] { prepare_initialization(subjects, fixed_layout(), AveragePoolEncoder(5), 32, 32); }) == ErrorCode::contract);
  const auto prepared = prepare_initialization(subjects, fixed_layout(), enc, 32, 32);
  CHECK(code_of([&] { initial_latent(prepared, small_init(32, 32, 4, 1.0), LatentGrid(4, 4, 3)); }) == ErrorCode::contract);
  CHECK(code_of([&] { initial_latent(prepared, small_init(32, 32, 4, -1.0), LatentGrid(8, 8, 3)); }) == ErrorCode::parameter);
}

TEST_CASE("file backed encoder checks the image size") {
  const FileBackedEncoder enc(LatentGrid(4, 4, 3, 0.25), 8);
  CHECK(enc.encode(Image(32, 32, 3)).at(0, 0, 0) == 0.25);
  CHECK_THROWS_AS(enc.encode(Image(32, 40, 3)), Error);
}

TEST_CASE("resized boxes paste the rescaled subject") {
  const std::vector<SegmentedSubject> one = {solid_subject(4, 4, 0.75f)};
  const std::vector<LayoutBox> layout = {{0, 0, 0, 16, 8}};
  const auto prepared = prepare_initialization(one, layout, AveragePoolEncoder(4), 16, 16);
  CHECK(prepared.composite_mask.count_nonzero() == 128);
  CHECK(prepared.masked_latent.at(1, 3, 0) == doctest::Approx(0.75));
  CHECK(prepared.masked_latent.at(2, 0, 0) == 0.0);
}

TEST_CASE("recommended gamma by subject count") {
  CHECK(recommended_gamma(2) == 2.0);
  CHECK(recommended_gamma(3) == 2.0);
  CHECK(recommended_gamma(5) == 3.0);
  CHECK(InitConfig{}.gamma == 1.0);
}

}  // TEST_SUITE
