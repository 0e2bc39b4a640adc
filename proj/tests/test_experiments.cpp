#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "mudikit/error.hpp"
#include "mudikit/experiments.hpp"
#include "mudikit/sprites.hpp"
#include "support.hpp"

using namespace mudikit;
using namespace testing;

namespace {

std::vector<SegmentedSubject> sprite_pair() {
  SpriteSpec a, b;
  a.shape = SpriteShape::disk;
  a.color = {0.9f, 0.1f, 0.1f};
  a.identifier = "red";
  b.shape = SpriteShape::square;
  b.color = {0.1f, 0.2f, 0.9f};
  b.identifier = "blue";
  RandomSource rng(1);
  return gen_sprites(std::vector<SpriteSpec>{a, b}, rng);
}

// Full-sort oracle: score descending, id ascending.
std::vector<std::string> sort_oracle(std::vector<ScoredItem> items, std::size_t k) {
  std::sort(items.begin(), items.end(), [](const ScoredItem& x, const ScoredItem& y) {
    return x.score != y.score ? x.score > y.score : x.id < y.id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(items[i].id);
  return out;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("identity-mix components") {
  const auto subjects = sprite_pair();
  const std::vector<double> w = {0.4, 0.4, 0.2};
  const auto setup = make_identity_mix_setup(subjects, AveragePoolEncoder(8), 32, 64, w, 0.05);
  const auto& gmm = setup.gmm;
  REQUIRE(gmm.components() == 3);
  CHECK(gmm.dim() == 4 * 8 * 3);
  CHECK(std::equal(gmm.mean(0).begin(), gmm.mean(0).end(), setup.prepared.masked_latent.values().begin()));
  // Swapped component mirrors the halves of the target.
  const auto& z = setup.prepared.masked_latent;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) CHECK(gmm.mean(1)[(y * 8 + x) * 3 + c] == z.at(y, x + 4, c));
  for (std::size_t i = 0; i < gmm.dim(); ++i)
    CHECK(gmm.mean(2)[i] == doctest::Approx(0.5 * (gmm.mean(0)[i] + gmm.mean(1)[i])));
  CHECK(setup.target_layout[0].x == 0);
  CHECK(setup.target_layout[1].right() == 64);
}

TEST_CASE("gamma sweep rows and common random numbers") {
  const auto subjects = sprite_pair();
  const std::vector<double> w = {0.4, 0.4, 0.2};
  const auto setup = make_identity_mix_setup(subjects, AveragePoolEncoder(8), 32, 64, w, 0.05);
  const auto schedule = make_schedule(100);
  const std::vector<double> gammas = {0.0, 4.0};
  const auto rows = gamma_sweep(setup, gammas, 40, schedule, 100, 7, 0.0);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].trials == 40);
  CHECK(rows[0].match_rate == rows[0].matches / 40.0);
  CHECK(rows[1].match_rate >= rows[0].match_rate);
  CHECK(rows[1].match_rate > 0.9);
  // Single-threaded and reordered runs see the same per-trial draws.
  const std::vector<double> reversed = {4.0, 0.0};
  const auto again = gamma_sweep(setup, reversed, 40, schedule, 100, 7, 0.0, InitVariant::mean_shift, 1);
  CHECK(again[0].matches == rows[1].matches);
  CHECK(again[1].matches == rows[0].matches);
  CHECK_THROWS_AS(gamma_sweep(setup, gammas, 0, schedule, 100, 7), Error);
}

TEST_CASE("gamma sweep csv format") {
  const std::vector<GammaSweepRow> rows = {{0.0, 0.4, 200, 500, 3}, {1.5, 2.0 / 3.0, 1, 3, 3}};
  CHECK(gamma_sweep_csv(rows) == "gamma,match_rate,trials,seed\n0.000000,0.400000,500,3\n1.500000,0.666667,3,3\n");
  const auto svg = gamma_sweep_svg(rows);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("top k selection") {
  const std::vector<ScoredItem> items = {{"b", 0.5}, {"a", 0.5}, {"c", 0.9}, {"d", -0.1}};
  CHECK(select_top_k(items, 4) == std::vector<std::string>{"c", "a", "b", "d"});
  CHECK(select_top_k(items, 2) == std::vector<std::string>{"c", "a"});
  CHECK_THROWS_AS(select_top_k(items, 5), Error);

  RandomSource rng(2);
  std::vector<ScoredItem> pool;
  for (int i = 0; i < 200; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "img_%03d", i);
    pool.push_back({id, std::round(rng.uniform() * 50.0) / 50.0});
  }
  const auto top = select_top_k(pool, 50);
  CHECK(top.size() == 50);
  CHECK(top == sort_oracle(pool, 50));
  double worst_kept = 1e9, best_dropped = -1e9;
  for (const auto& it : pool) {
    if (std::find(top.begin(), top.end(), it.id) != top.end()) worst_kept = std::min(worst_kept, it.score);
    else best_dropped = std::max(best_dropped, it.score);
  }
  CHECK(worst_kept >= best_dropped);
}

TEST_CASE("latent decoding inverts block averaging") {
  RandomSource rng(3);
  LatentGrid z(3, 4, 3);
  for (double& v : z.values()) v = rng.uniform_int(0, 255) / 255.0;
  const auto img = decode_latent_image(z, 4);
  CHECK(img.height() == 12);
  const auto back = AveragePoolEncoder(4).encode(img);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(back.values()[i] == doctest::Approx(z.values()[i]).epsilon(1e-6));
  LatentGrid wild(1, 1, 1, 3.0);
  CHECK(decode_latent_image(wild, 2).at(1, 1, 0) == 1.0f);
}

TEST_CASE("scoring a clean composite of the references") {
  const auto subjects = sprite_pair();
  std::vector<EmbeddingSet> refs;
  Image canvas(32, 96, 3);
  Mask m(32, 96);
  int x = 4;
  for (const auto& s : subjects) {
    const auto box = bounding_box(s.mask);
    Image on_black(32, 32, 3);
    Mask unused(32, 32);
    paste_subject(on_black, unused, s, 0, 0);
    refs.push_back(proxy_embed(on_black, box, s.identifier));
    paste_subject(canvas, m, s, x - box.x, 0);
    x += box.width + 20;
  }
  const auto scored = score_image(canvas, refs, 0.1);
  CHECK(scored.detections.boxes.size() == 2);
  CHECK(scored.score == doctest::Approx(1.0).epsilon(1e-9));

  // One missing subject is a count error.
  Image half(32, 48, 3);
  Mask hm(32, 48);
  paste_subject(half, hm, subjects[0], 0, 0);
  CHECK(score_image(half, refs, 0.1).score == 0.0);
}

}  // TEST_SUITE
