#include "mudikit/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mudikit/error.hpp"
#include "mudikit/parallel.hpp"
#include "mudikit/sampler.hpp"
#include "mudikit/sprites.hpp"

namespace mudikit {

namespace {

std::vector<LayoutBox> flush_layout(const SegmentedSubject& left, int left_index,
                                    const SegmentedSubject& right, int right_index, int canvas_height,
                                    int canvas_width) {
  const auto box = [&](const SegmentedSubject& s, int index, int x) {
    return LayoutBox{index, x, (canvas_height - s.image.height()) / 2, s.image.width(), s.image.height()};
  };
  return {box(left, left_index, 0), box(right, right_index, canvas_width - right.image.width())};
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

IdentityMixSetup make_identity_mix_setup(std::span<const SegmentedSubject> subjects,
                                         const Encoder& encoder, int canvas_height,
                                         int canvas_width, std::span<const double> weights,
                                         double tau) {
  require(subjects.size() == 2, ErrorCode::parameter, "the identity-mixing setup takes two subjects");
  require(weights.size() == 3, ErrorCode::parameter, "the identity-mixing setup takes three weights");
  for (const auto& s : subjects)
    require(s.image.height() <= canvas_height && s.image.width() <= canvas_width,
            ErrorCode::does_not_fit, "subject '" + s.identifier + "' does not fit the canvas");

  auto target_layout = flush_layout(subjects[0], 0, subjects[1], 1, canvas_height, canvas_width);
  const auto swapped_layout = flush_layout(subjects[1], 1, subjects[0], 0, canvas_height, canvas_width);
  PreparedInit target = prepare_initialization(subjects, target_layout, encoder, canvas_height, canvas_width);
  const PreparedInit swapped =
      prepare_initialization(subjects, swapped_layout, encoder, canvas_height, canvas_width);

  const auto mu_a = target.masked_latent.values();
  const auto mu_b = swapped.masked_latent.values();
  const std::size_t dim = mu_a.size();
  std::vector<double> means(3 * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    means[i] = mu_a[i];
    means[dim + i] = mu_b[i];
    means[2 * dim + i] = 0.5 * (mu_a[i] + mu_b[i]);
  }
  GmmScoreModel gmm(dim, std::move(means), std::vector<double>(weights.begin(), weights.end()), tau);
  return IdentityMixSetup{std::vector<SegmentedSubject>(subjects.begin(), subjects.end()),
                          std::move(target_layout), std::move(target), std::move(gmm)};
}

std::vector<GammaSweepRow> gamma_sweep(const IdentityMixSetup& setup, std::span<const double> gammas,
                                       int trials, const NoiseSchedule& schedule, int sample_steps,
                                       std::uint64_t seed, double eta, InitVariant variant,
                                       unsigned threads) {
  require(trials >= 1, ErrorCode::parameter, "trials must be at least 1");
  require(!gammas.empty(), ErrorCode::parameter, "no gamma values given");
  for (double g : gammas) require(g >= 0.0, ErrorCode::parameter, "gamma must be nonnegative");

  const std::size_t n_gamma = gammas.size();
  const auto n_trials = static_cast<std::size_t>(trials);
  std::vector<std::uint8_t> matched(n_gamma * n_trials, 0);
  const RandomSource base(seed);
  const auto& shape = setup.prepared.masked_latent;

  parallel_for(
      n_gamma * n_trials,
      [&](std::size_t job) {
        const std::size_t g = job / n_trials, i = job % n_trials;
        RandomSource rng = base.split(i);
        LatentGrid noise(shape.height(), shape.width(), shape.channels());
        rng.fill_normal(noise.values());
        InitConfig config;
        config.gamma = gammas[g];
        config.variant = variant;
        const InitResult init = initial_latent(setup.prepared, config, noise, &schedule);
        const SampleResult result = sample(setup.gmm, schedule, init.latent, sample_steps, rng, eta);
        matched[job] = nearest_component(result.latent, setup.gmm) == IdentityMixSetup::target_component;
      },
      threads);

  std::vector<GammaSweepRow> rows;
  for (std::size_t g = 0; g < n_gamma; ++g) {
    int count = 0;
    for (std::size_t i = 0; i < n_trials; ++i) count += matched[g * n_trials + i];
    rows.push_back({gammas[g], static_cast<double>(count) / trials, count, trials, seed});
  }
  return rows;
}

std::string gamma_sweep_csv(std::span<const GammaSweepRow> rows) {
  std::string out = "gamma,match_rate,trials,seed\n";
  for (const auto& r : rows)
    out += fixed6(r.gamma) + "," + fixed6(r.match_rate) + "," + std::to_string(r.trials) + "," +
           std::to_string(r.seed) + "\n";
  return out;
}

std::string gamma_sweep_svg(std::span<const GammaSweepRow> rows) {
  constexpr double width = 480, height = 320, left = 60, right = 20, top = 20, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double g_min = 0.0, g_max = 1.0;
  if (!rows.empty()) {
    g_min = rows.front().gamma;
    g_max = rows.front().gamma;
    for (const auto& r : rows) {
      g_min = std::min(g_min, r.gamma);
      g_max = std::max(g_max, r.gamma);
    }
    if (g_max == g_min) g_max = g_min + 1.0;
  }
  const auto px = [&](double g) { return left + (g - g_min) / (g_max - g_min) * plot_w; };
  const auto py = [&](double rate) { return top + (1.0 - rate) * plot_h; };
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<path d=\"M%.2f %.2f V%.2f H%.2f\" stroke=\"black\" fill=\"none\"/>\n", left, top,
                top + plot_h, left + plot_w);
  svg += buf;
  for (int i = 0; i <= 4; ++i) {
    const double rate = i / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%.2f</text>\n", left - 6,
                  py(rate) + 4, rate);
    svg += buf;
  }
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%g</text>\n", px(r.gamma),
                  top + plot_h + 18, r.gamma);
    svg += buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">gamma</text>\n", left + plot_w / 2,
                height - 8);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text transform=\"translate(16 %.2f) rotate(-90)\" text-anchor=\"middle\">"
                "layout match rate</text>\n",
                top + plot_h / 2);
  svg += buf;
  if (!rows.empty()) {
    svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(rows[i].gamma), py(rows[i].match_rate));
      svg += buf;
    }
    svg += "\"/>\n";
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#1f77b4\"/>\n",
                    px(r.gamma), py(r.match_rate));
      svg += buf;
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> select_top_k(std::span<const ScoredItem> items, std::size_t k) {
  require(k <= items.size(), ErrorCode::parameter,
          "k = " + std::to_string(k) + " exceeds the " + std::to_string(items.size()) + " items");
  for (const auto& item : items)
    require(!std::isnan(item.score), ErrorCode::parameter, "score of '" + item.id + "' is NaN");
  std::vector<const ScoredItem*> order;
  order.reserve(items.size());
  for (const auto& item : items) order.push_back(&item);
  const auto before = [](const ScoredItem* a, const ScoredItem* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->id < b->id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
  std::vector<std::string> ids;
  ids.reserve(k);
  for (std::size_t i = 0; i < k; ++i) ids.push_back(order[i]->id);
  return ids;
}

Image decode_latent_image(const LatentGrid& latent, int factor) {
  require(factor >= 1, ErrorCode::parameter, "decode factor must be at least 1");
  require(latent.channels() == 1 || latent.channels() == 3, ErrorCode::contract,
          "only 1- or 3-channel latents decode to images");
  Image out(latent.height() * factor, latent.width() * factor, latent.channels());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int c = 0; c < out.channels(); ++c)
        out.at(y, x, c) = static_cast<float>(std::clamp(latent.at(y / factor, x / factor, c), 0.0, 1.0));
  return out;
}

ImageScore score_detections(const Image& image, const DetectionRecord& detections,
                            std::span<const EmbeddingSet> references, RowSortRule rule) {
  std::vector<EmbeddingSet> embedded;
  for (std::size_t i = 0; i < detections.boxes.size(); ++i) {
    const auto& b = detections.boxes[i];
    const LayoutBox box{static_cast<int>(i), b.x0, b.y0, b.x1 - b.x0, b.y1 - b.y0};
    embedded.push_back(proxy_embed(image, box, "det" + std::to_string(i)));
  }
  ImageScore result;
  result.detections = detections;
  result.matrices = build_matrices(embedded, references, rule);
  result.score = dnc_score(result.matrices);
  return result;
}

ImageScore score_image(const Image& image, std::span<const EmbeddingSet> references, double threshold,
                       RowSortRule rule, const std::string& image_id) {
  return score_detections(image, detect_components(image, threshold, image_id), references, rule);
}

}  // namespace mudikit
