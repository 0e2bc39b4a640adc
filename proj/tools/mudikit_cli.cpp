// mudikit command-line front end.
//
// Exit codes: 0 success, 1 invalid invocation or input, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mudikit/config.hpp"
#include "mudikit/dnc.hpp"
#include "mudikit/error.hpp"
#include "mudikit/experiments.hpp"
#include "mudikit/init.hpp"
#include "mudikit/io.hpp"
#include "mudikit/losses.hpp"
#include "mudikit/parallel.hpp"
#include "mudikit/sampler.hpp"
#include "mudikit/segmix.hpp"
#include "mudikit/sprites.hpp"

namespace fs = std::filesystem;
using namespace mudikit;
using nlohmann::json;

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string numbered(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return prefix + buf;
}

std::vector<double> parse_reals(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(used == item.size(), ErrorCode::validation, "");
    } catch (const std::exception&) {
      fail(ErrorCode::validation, flag + ": '" + item + "' is not a number");
    }
  }
  require(!out.empty(), ErrorCode::validation, flag + ": empty list");
  return out;
}

std::vector<double> read_numbers(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      require(used == token.size(), ErrorCode::format, "");
    } catch (const std::exception&) {
      fail(ErrorCode::format, path.string() + ": '" + token + "' is not a number");
    }
  }
  return out;
}

std::vector<EmbeddingSet> load_references(const fs::path& dir) {
  std::vector<std::string> warnings;
  auto refs = read_embedding_dir(dir, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  require(!refs.empty(), ErrorCode::validation, "--refs: no .mdie files in '" + dir.string() + "'");
  return refs;
}

/// Default sprite pair used when no subjects are given.
std::vector<SpriteSpec> default_sprite_specs(std::size_t count, int canvas, int size, float texture) {
  static const std::array<std::array<float, 3>, 6> colors = {{{0.9f, 0.1f, 0.1f},
                                                               {0.1f, 0.2f, 0.9f},
                                                               {0.1f, 0.8f, 0.2f},
                                                               {0.9f, 0.8f, 0.1f},
                                                               {0.8f, 0.1f, 0.8f},
                                                               {0.1f, 0.8f, 0.8f}}};
  static const std::array<SpriteShape, 3> shapes = {SpriteShape::disk, SpriteShape::square,
                                                    SpriteShape::triangle};
  static const std::array<const char*, 3> shape_names = {"disk", "square", "triangle"};
  std::vector<SpriteSpec> specs;
  for (std::size_t i = 0; i < count; ++i) {
    SpriteSpec s;
    s.canvas_height = s.canvas_width = canvas;
    s.size = size;
    s.shape = shapes[i % 3];
    s.color = colors[i % colors.size()];
    s.texture = texture;
    s.identifier = "sprite" + std::to_string(i);
    s.class_text = std::string(shape_names[i % 3]) + " " + std::to_string(i);
    specs.push_back(s);
  }
  return specs;
}

/// The subject pasted on a black canvas and cropped to its mask, the way it
/// appears inside a composite.
EmbeddingSet reference_embedding(const SegmentedSubject& s) {
  Image on_black(s.image.height(), s.image.width(), s.image.channels());
  for (int y = 0; y < s.image.height(); ++y)
    for (int x = 0; x < s.image.width(); ++x)
      if (s.mask.at(y, x))
        for (int c = 0; c < s.image.channels(); ++c) on_black.at(y, x, c) = s.image.at(y, x, c);
  return proxy_embed(on_black, bounding_box(s.mask), s.identifier);
}

json matrix_json(const SquareMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json score_report(const ImageScore& s) {
  json report = {{"score", s.score}, {"display_score", display_score(s.score)}};
  if (const auto* err = std::get_if<CountError>(&s.matrices)) {
    report["count_error"] = {{"detections", err->detections}, {"references", err->references}};
  } else {
    const auto& pair = std::get<SimilarityPair>(s.matrices);
    report["s_gt"] = matrix_json(pair.s_gt);
    report["s_dc"] = matrix_json(pair.s_dc);
    report["s_dc_unsorted"] = matrix_json(pair.s_dc_raw);
    report["row_order"] = pair.row_order;
    report["reference_order"] = pair.reference_order;
  }
  return report;
}

const std::map<std::string, InitVariant> kVariants = {{"mean_shift", InitVariant::mean_shift},
                                                      {"forward_noise", InitVariant::forward_noise}};
const std::map<std::string, ScheduleKind> kSchedules = {{"cosine", ScheduleKind::cosine},
                                                        {"linear", ScheduleKind::linear}};
const std::map<std::string, RowSortRule> kRowSorts = {
    {"greedy_global", RowSortRule::greedy_global}, {"column_sequential", RowSortRule::column_sequential}};
const std::map<std::string, LossKind> kLosses = {
    {"dm", LossKind::dm}, {"db", LossKind::db}, {"kl", LossKind::kl}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mudikit: multi-subject personalization toolkit and diffusion sandbox"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  fs::path config_path;
  app.add_option("--config", config_path, "RunConfig JSON; command-line flags take precedence")
      ->check(CLI::ExistingFile);

  // The config file is read before the options are declared so that its
  // values become the flag defaults and explicit flags override them.
  RunConfig cfg;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      std::string path;
      if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
      else if (arg.starts_with("--config=")) path = arg.substr(9);
      // A missing file is reported by the option's own check below.
      if (!path.empty() && fs::exists(path)) cfg = load_config(path);
    }
  } catch (const Error& e) {
    std::cerr << "error: --config: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  }
  std::uint64_t seed = 0;
  std::function<int()> run;

  // sprites ------------------------------------------------------------------
  auto* sprites = app.add_subcommand("sprites", "Generate procedural sprite subjects and their reference embeddings");
  struct {
    fs::path out;
    int count = 2, canvas = 32, size = 16;
    float texture = 0.0f;
  } sp;
  sprites->add_option("--out", sp.out, "Output directory")->required();
  sprites->add_option("--seed", seed, "Random seed")->required();
  sprites->add_option("--count", sp.count, "Number of sprites")->check(CLI::Range(1, 64));
  sprites->add_option("--canvas", sp.canvas, "Square canvas size in pixels")->check(CLI::Range(8, 4096));
  sprites->add_option("--size", sp.size, "Shape size in pixels")->check(CLI::PositiveNumber);
  sprites->add_option("--texture", sp.texture, "Per-pixel texture amplitude")->check(CLI::Range(0.0, 1.0));
  sprites->callback([&] {
    run = [&] {
      RandomSource rng(seed);
      const auto specs = default_sprite_specs(sp.count, sp.canvas, sp.size, sp.texture);
      const auto subjects = gen_sprites(specs, rng);
      fs::create_directories(sp.out / "refs");
      for (const auto& s : subjects) {
        save_subject(s, sp.out, "sprite");
        write_embeddings(reference_embedding(s), sp.out / "refs" / (s.identifier + ".mdie"));
      }
      std::cout << "wrote " << subjects.size() << " subjects to " << sp.out.string() << "\n";
      return 0;
    };
  });

  // segmix -------------------------------------------------------------------
  auto* segmix = app.add_subcommand("segmix", "Compose Seg-Mix bundles from segmented subjects");
  struct {
    fs::path subjects, out;
    int count = 1;
    bool cutmix = false;
    std::string scales;
  } sm;
  if (cfg.segmix.scales) {
    for (double v : *cfg.segmix.scales) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", v);
      sm.scales += (sm.scales.empty() ? "" : ",") + std::string(buf);
    }
  }
  segmix->add_option("--subjects", sm.subjects, "Subject directory")->required()->check(CLI::ExistingDirectory);
  segmix->add_option("--out", sm.out, "Output directory for bundles")->required();
  segmix->add_option("--count", sm.count, "Number of composites")->check(CLI::PositiveNumber);
  segmix->add_option("--seed", seed, "Random seed")->required();
  segmix->add_option("--height", cfg.segmix.out_height, "Canvas height");
  segmix->add_option("--width", cfg.segmix.out_width, "Canvas width");
  segmix->add_option("--max-margin", cfg.segmix.max_margin, "Largest side margin in pixels");
  segmix->add_option("--scales", sm.scales, "Comma-separated per-subject scales (default: random)");
  segmix->add_flag("--cutmix", sm.cutmix, "Use the Cut-Mix baseline instead of Seg-Mix");
  segmix->callback([&] {
    run = [&] {
      if (!sm.scales.empty()) cfg.segmix.scales = parse_reals(sm.scales, "--scales");
      const auto subjects = load_subjects(sm.subjects);
      require(subjects.size() >= 2, ErrorCode::validation, "--subjects: need at least two subjects");
      std::vector<CompositeSample> samples(sm.count);
      const RandomSource base(seed);
      parallel_for(samples.size(), [&](std::size_t i) {
        RandomSource rng = base.split(i);
        std::size_t a = 0, b = 1;
        if (subjects.size() > 2) {
          a = rng.uniform_int(0, subjects.size() - 1);
          b = rng.uniform_int(0, subjects.size() - 2);
          if (b >= a) ++b;
        }
        const std::vector<SegmentedSubject> pair = {subjects[a], subjects[b]};
        samples[i] = sm.cutmix ? cutmix_compose(pair, cfg.segmix, rng) : create_seg_mix(pair, cfg.segmix, rng);
      });
      for (std::size_t i = 0; i < samples.size(); ++i) write_bundle(samples[i], sm.out / numbered("sample_", i));
      std::cout << "wrote " << samples.size() << " bundles to " << sm.out.string() << "\n";
      return 0;
    };
  });

  // prior --------------------------------------------------------------------
  auto* prior = app.add_subcommand("prior", "Build the Seg-Mix prior set from segmented prior subjects");
  struct {
    fs::path priors, out;
    int count = 50;
  } pr;
  prior->add_option("--priors", pr.priors, "Prior subject directory")->required()->check(CLI::ExistingDirectory);
  prior->add_option("--out", pr.out, "Output directory for bundles")->required();
  prior->add_option("--count", pr.count, "Number of prior composites")->check(CLI::PositiveNumber);
  prior->add_option("--seed", seed, "Random seed")->required();
  prior->add_option("--height", cfg.segmix.out_height, "Canvas height");
  prior->add_option("--width", cfg.segmix.out_width, "Canvas width");
  prior->callback([&] {
    run = [&] {
      const auto priors = load_subjects(pr.priors);
      RandomSource rng(seed);
      const auto samples = build_prior_set(priors, pr.count, cfg.segmix, rng);
      for (std::size_t i = 0; i < samples.size(); ++i) write_bundle(samples[i], pr.out / numbered("prior_", i));
      std::cout << "wrote " << samples.size() << " prior bundles to " << pr.out.string() << "\n";
      return 0;
    };
  });

  // init ---------------------------------------------------------------------
  auto* init = app.add_subcommand("init", "Write a mean-shifted initial latent");
  struct {
    fs::path subjects, out, layout, latent;
    std::string variant;
  } in;
  in.variant = to_string(cfg.init.variant);
  init->add_option("--subjects", in.subjects, "Subject directory")->required()->check(CLI::ExistingDirectory);
  init->add_option("--out", in.out, "Output latent file (.mdil)")->required();
  init->add_option("--seed", seed, "Noise seed")->required();
  init->add_option("--layout", in.layout, "Layout JSON (default: random layout)")->check(CLI::ExistingFile);
  init->add_option("--encoder-latent", in.latent, "Use this stored latent instead of average pooling")
      ->check(CLI::ExistingFile);
  init->add_option("--gamma", cfg.init.gamma, "Initialization strength")->check(CLI::NonNegativeNumber);
  init->add_option("--variant", in.variant, "mean_shift or forward_noise")
               ->check(CLI::IsMember({"mean_shift", "forward_noise"}));
  init->add_option("--height", cfg.init.canvas_height, "Canvas height");
  init->add_option("--width", cfg.init.canvas_width, "Canvas width");
  init->add_option("--max-margin", cfg.init.max_margin, "Largest side margin for random layouts");
  init->add_option("--factor", cfg.init.downscale_factor, "Encoder downscale factor");
  init->add_option("--steps", cfg.sandbox.steps, "Schedule length T (forward_noise)");
  init->callback([&] {
    run = [&] {
      cfg.init.variant = kVariants.at(in.variant);
      cfg.init.noise_seed = seed;
      cfg.init.validate();
      const auto subjects = load_subjects(in.subjects);
      std::vector<std::string> ids;
      for (const auto& s : subjects) ids.push_back(s.identifier);
      RandomSource rng(seed);
      std::vector<LayoutBox> layout;
      if (!in.layout.empty()) {
        const LlmLayout file = load_llm_layout(in.layout, ids);
        require(file.canvas_height == cfg.init.canvas_height && file.canvas_width == cfg.init.canvas_width,
                ErrorCode::validation, "--layout: canvas differs from --height/--width");
        layout = file.boxes;
      } else {
        layout = random_layout(subjects, cfg.init.canvas_height, cfg.init.canvas_width, cfg.init.max_margin, rng);
      }
      std::unique_ptr<Encoder> encoder;
      if (!in.latent.empty())
        encoder = std::make_unique<FileBackedEncoder>(FileBackedEncoder::from_file(in.latent, cfg.init.downscale_factor));
      else
        encoder = std::make_unique<AveragePoolEncoder>(cfg.init.downscale_factor);
      const auto schedule = make_schedule(cfg.sandbox.steps, cfg.sandbox.schedule);
      const auto result = latent_initialize(subjects, layout, *encoder, cfg.init, rng, &schedule);
      if (result.saturation_warning)
        std::cerr << "warning: gamma " << cfg.init.gamma << " >= " << kSaturationGamma
                  << " tends to saturate the output\n";
      write_latent(result.latent, in.out);
      std::cout << "wrote " << result.latent.height() << "x" << result.latent.width() << "x"
                << result.latent.channels() << " latent to " << in.out.string() << "\n";
      return 0;
    };
  });

  // dnc ----------------------------------------------------------------------
  auto* dnc = app.add_subcommand("dnc", "Detect-and-Compare score of one image");
  struct {
    fs::path detections, refs, image, report = "dnc_report.json";
    std::string row_sort;
  } dc;
  dc.row_sort = to_string(cfg.dnc.row_sort);
  dnc->add_option("--detections", dc.detections,
                  "Detections JSON (needs --image) or a directory of per-detection .mdie embeddings")
      ->required()
      ->check(CLI::ExistingPath);
  dnc->add_option("--refs", dc.refs, "Directory of reference .mdie embeddings")
      ->required()
      ->check(CLI::ExistingDirectory);
  dnc->add_option("--image", dc.image, "Image the detections refer to")->check(CLI::ExistingFile);
  dnc->add_option("--report", dc.report, "JSON report path");
  dnc->add_option("--row-sort", dc.row_sort, "greedy_global or column_sequential")
               ->check(CLI::IsMember({"greedy_global", "column_sequential"}));
  dnc->callback([&] {
    run = [&] {
      const auto refs = load_references(dc.refs);
      const RowSortRule rule = kRowSorts.at(dc.row_sort);
      ImageScore result;
      if (fs::is_directory(dc.detections)) {
        std::vector<std::string> warnings;
        const auto dets = read_embedding_dir(dc.detections, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        result.matrices = build_matrices(dets, refs, rule);
        result.score = dnc_score(result.matrices);
      } else {
        require(!dc.image.empty(), ErrorCode::validation, "--image is required with a detections JSON file");
        result = score_detections(load_image(dc.image), read_detections(dc.detections), refs, rule);
      }
      write_text_file(dc.report, score_report(result).dump(2) + "\n");
      std::cout << fixed6(result.score) << "\n";
      return 0;
    };
  });

  // corr ---------------------------------------------------------------------
  auto* corr = app.add_subcommand("corr", "Spearman and AUROC of metric scores against human labels");
  struct {
    fs::path scores, labels;
  } co;
  corr->add_option("--scores", co.scores, "Whitespace-separated metric scores")->required()->check(CLI::ExistingFile);
  corr->add_option("--labels", co.labels, "Human scores in [0,1]; above 0.5 counts as positive for AUROC")
      ->required()
      ->check(CLI::ExistingFile);
  corr->callback([&] {
    run = [&] {
      const auto scores = read_numbers(co.scores);
      const auto labels = read_numbers(co.labels);
      require(scores.size() == labels.size(), ErrorCode::validation,
              "--scores and --labels hold different counts");
      std::vector<int> binary;
      for (double l : labels) binary.push_back(l > 0.5 ? 1 : 0);
      std::cout << "spearman " << fixed6(spearman(scores, labels)) << "\n";
      std::cout << "auroc " << fixed6(auroc(scores, binary)) << "\n";
      return 0;
    };
  });

  // sample -------------------------------------------------------------------
  auto* samp = app.add_subcommand("sample", "Sample the identity-mixing mixture, optionally from a mean-shifted start");
  struct {
    fs::path subjects, out;
    int count = 8;
    double eta = 1.0;
    std::string schedule;
  } sa;
  sa.schedule = to_string(cfg.sandbox.schedule);
  samp->add_option("--subjects", sa.subjects, "Subject directory (first two subjects are used)")
      ->required()
      ->check(CLI::ExistingDirectory);
  samp->add_option("--out", sa.out, "Output directory")->required();
  samp->add_option("--seed", seed, "Random seed")->required();
  samp->add_option("--count", sa.count, "Number of samples")->check(CLI::PositiveNumber);
  samp->add_option("--eta", sa.eta, "Sampler noise: 1 ancestral, 0 deterministic")->check(CLI::Range(0.0, 1.0));
  samp->add_option("--gamma", cfg.init.gamma, "Initialization strength (0: pure noise)")
               ->check(CLI::NonNegativeNumber);
  samp->add_option("--steps", cfg.sandbox.steps, "Schedule length T");
  samp->add_option("--sample-steps", cfg.sandbox.sample_steps, "Reverse steps");
  samp->add_option("--schedule", sa.schedule, "cosine or linear")->check(CLI::IsMember({"cosine", "linear"}));
  samp->add_option("--tau", cfg.sandbox.tau, "Mixture width")->check(CLI::PositiveNumber);
  samp->add_option("--factor", cfg.init.downscale_factor, "Encoder downscale factor");
  samp->callback([&] {
    run = [&] {
      cfg.sandbox.schedule = kSchedules.at(sa.schedule);
      cfg.sandbox.validate();
      auto subjects = load_subjects(sa.subjects);
      require(subjects.size() >= 2, ErrorCode::validation, "--subjects: need at least two subjects");
      subjects.resize(2);
      const int h = std::max(subjects[0].image.height(), subjects[1].image.height());
      const int w = subjects[0].image.width() + subjects[1].image.width();
      const AveragePoolEncoder encoder(cfg.init.downscale_factor);
      const auto setup = make_identity_mix_setup(subjects, encoder, h, w, cfg.sandbox.mixture_weights, cfg.sandbox.tau);
      const auto schedule = make_schedule(cfg.sandbox.steps, cfg.sandbox.schedule);
      const auto& shape = setup.prepared.masked_latent;
      std::vector<LatentGrid> latents(sa.count);
      const RandomSource base(seed);
      parallel_for(latents.size(), [&](std::size_t i) {
        RandomSource rng = base.split(i);
        LatentGrid noise(shape.height(), shape.width(), shape.channels());
        rng.fill_normal(noise.values());
        InitConfig ic = cfg.init;
        const auto z = initial_latent(setup.prepared, ic, noise, &schedule).latent;
        const auto r = sample(setup.gmm, schedule, z, cfg.sandbox.sample_steps, rng, sa.eta);
        latents[i] = LatentGrid(shape.height(), shape.width(), shape.channels(), r.latent);
      });
      fs::create_directories(sa.out);
      std::string listing = "id,component\n";
      for (std::size_t i = 0; i < latents.size(); ++i) {
        const std::string id = numbered("sample_", i);
        write_latent(latents[i], sa.out / (id + ".mdil"));
        save_image(decode_latent_image(latents[i], cfg.init.downscale_factor), sa.out / (id + ".png"));
        listing += id + "," + std::to_string(nearest_component(latents[i].values(), setup.gmm)) + "\n";
      }
      write_text_file(sa.out / "components.csv", listing);
      std::cout << "wrote " << latents.size() << " samples to " << sa.out.string() << "\n";
      return 0;
    };
  });

  // gamma-sweep --------------------------------------------------------------
  auto* sweep = app.add_subcommand("gamma-sweep", "Layout-match rate of sampled images against the init strength");
  struct {
    fs::path subjects, out = ".";
    std::string gammas, schedule;
    int trials = 0;
    double eta = 0.0;
  } sw;
  for (double g : cfg.sandbox.sweep_gammas) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", g);
    sw.gammas += (sw.gammas.empty() ? "" : ",") + std::string(buf);
  }
  sw.schedule = to_string(cfg.sandbox.schedule);
  sw.trials = cfg.sandbox.sweep_trials;
  sw.eta = cfg.sandbox.sweep_eta;
  sweep->add_option("--subjects", sw.subjects, "Subject directory (default: built-in sprite pair)")
      ->check(CLI::ExistingDirectory);
  sweep->add_option("--out", sw.out, "Output directory for gamma_sweep.csv and gamma_sweep.svg");
  sweep->add_option("--seed", seed, "Random seed")->required();
  sweep->add_option("--gammas", sw.gammas, "Comma-separated gamma values");
  sweep->add_option("--trials", sw.trials, "Samples per gamma");
  sweep->add_option("--eta", sw.eta, "Sampler noise: 1 ancestral, 0 deterministic")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--schedule", sw.schedule, "cosine or linear")->check(CLI::IsMember({"cosine", "linear"}));
  sweep->add_option("--steps", cfg.sandbox.steps, "Schedule length T");
  sweep->add_option("--sample-steps", cfg.sandbox.sample_steps, "Reverse steps");
  sweep->add_option("--tau", cfg.sandbox.tau, "Mixture width")->check(CLI::PositiveNumber);
  sweep->callback([&] {
    run = [&] {
      require(sw.trials >= 1, ErrorCode::validation, "--trials must be at least 1");
      const auto gammas = parse_reals(sw.gammas, "--gammas");
      for (double g : gammas) require(g >= 0.0, ErrorCode::validation, "--gammas: values must be nonnegative");
      cfg.sandbox.validate();
      std::vector<SegmentedSubject> subjects;
      if (sw.subjects.empty()) {
        RandomSource sprite_rng(seed);
        subjects = gen_sprites(default_sprite_specs(2, 32, 16, 0.0f), sprite_rng);
      } else {
        subjects = load_subjects(sw.subjects);
        require(subjects.size() >= 2, ErrorCode::validation, "--subjects: need at least two subjects");
        subjects.resize(2);
      }
      const int h = std::max(subjects[0].image.height(), subjects[1].image.height());
      const int w = subjects[0].image.width() + subjects[1].image.width();
      const AveragePoolEncoder encoder(cfg.init.downscale_factor);
      const auto setup = make_identity_mix_setup(subjects, encoder, h, w, cfg.sandbox.mixture_weights, cfg.sandbox.tau);
      const auto schedule = make_schedule(cfg.sandbox.steps, kSchedules.at(sw.schedule));
      const auto rows = gamma_sweep(setup, gammas, sw.trials, schedule, cfg.sandbox.sample_steps, seed, sw.eta);
      fs::create_directories(sw.out);
      write_text_file(sw.out / "gamma_sweep.csv", gamma_sweep_csv(rows));
      write_text_file(sw.out / "gamma_sweep.svg", gamma_sweep_svg(rows));
      std::cout << gamma_sweep_csv(rows);
      return 0;
    };
  });

  // iterate ------------------------------------------------------------------
  auto* iterate = app.add_subcommand("iterate", "Score a pool of generated images and select the top k");
  struct {
    fs::path pool, refs, out = "selected.txt";
    std::size_t k = 50;
    std::string row_sort;
    double threshold = 0.1;
  } it;
  it.row_sort = to_string(cfg.dnc.row_sort);
  it.threshold = cfg.dnc.detection_threshold;
  iterate->add_option("--pool", it.pool, "Directory of generated .png images (optional NAME.json detections)")
      ->required()
      ->check(CLI::ExistingDirectory);
  iterate->add_option("--refs", it.refs, "Directory of reference .mdie embeddings")
      ->required()
      ->check(CLI::ExistingDirectory);
  iterate->add_option("--k", it.k, "Number of images to keep");
  iterate->add_option("--out", it.out, "Selected ids, one per line; scores go to <out>.scores.csv");
  iterate->add_option("--row-sort", it.row_sort, "greedy_global or column_sequential")
               ->check(CLI::IsMember({"greedy_global", "column_sequential"}));
  iterate->add_option("--threshold", it.threshold, "Component detector threshold")->check(CLI::Range(0.0, 1.0));
  iterate->callback([&] {
    run = [&] {
      const auto refs = load_references(it.refs);
      std::vector<fs::path> images;
      for (const auto& entry : fs::directory_iterator(it.pool)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".png" && !name.ends_with(".mask.png")) images.push_back(entry.path());
      }
      std::sort(images.begin(), images.end());
      require(!images.empty(), ErrorCode::validation, "--pool: no .png images");
      std::vector<ScoredItem> items(images.size());
      const RowSortRule rule = kRowSorts.at(it.row_sort);
      parallel_for(images.size(), [&](std::size_t i) {
        const std::string id = images[i].stem().string();
        const Image image = load_image(images[i]);
        const fs::path det_file = images[i].parent_path() / (id + ".json");
        const ImageScore s = fs::exists(det_file)
                                 ? score_detections(image, read_detections(det_file), refs, rule)
                                 : score_image(image, refs, it.threshold, rule, id);
        items[i] = {id, s.score};
      });
      const auto selected = select_top_k(items, it.k);
      std::string listing, scores = "id,score\n";
      for (const auto& id : selected) listing += id + "\n";
      for (const auto& item : items) scores += item.id + "," + fixed6(item.score) + "\n";
      write_text_file(it.out, listing);
      write_text_file(it.out.string() + ".scores.csv", scores);
      std::cout << "selected " << selected.size() << " of " << items.size() << " images\n";
      return 0;
    };
  });

  // gradcheck ----------------------------------------------------------------
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the training-loss gradients");
  struct {
    std::string loss = "dm";
    int dim = 8, examples = 3, conditions = 2;
    double epsilon = 1e-5, tolerance = 1e-4;
  } gc;
  gradcheck->add_option("--loss", gc.loss, "dm, db or kl")->check(CLI::IsMember({"dm", "db", "kl"}));
  gradcheck->add_option("--seed", seed, "Random seed")->required();
  gradcheck->add_option("--dim", gc.dim, "Latent dimension")->check(CLI::Range(1, 1024));
  gradcheck->add_option("--examples", gc.examples, "Examples per training set")->check(CLI::Range(1, 1024));
  gradcheck->add_option("--epsilon", gc.epsilon, "Central-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", gc.tolerance, "Exit 2 when the error exceeds this")->check(CLI::PositiveNumber);
  gradcheck->add_option("--steps", cfg.sandbox.steps, "Schedule length T");
  gradcheck->add_option("--lambda", cfg.sandbox.lambda, "Prior-preservation weight");
  gradcheck->add_option("--kl-weight", cfg.sandbox.kl_weight, "KL penalty weight");
  gradcheck->callback([&] {
    run = [&] {
      cfg.sandbox.validate();
      RandomSource rng(seed);
      const auto schedule = make_schedule(cfg.sandbox.steps, cfg.sandbox.schedule);
      AffineDenoiser model = AffineDenoiser::random(gc.dim, cfg.sandbox.steps, gc.conditions, rng);
      const AffineDenoiser reference = AffineDenoiser::random(gc.dim, cfg.sandbox.steps, gc.conditions, rng);
      TrainingSets sets;
      sets.lambda = cfg.sandbox.lambda;
      for (auto* set : {&sets.ref_set, &sets.prior_set})
        for (int i = 0; i < gc.examples; ++i) {
          TrainingExample ex;
          ex.x0.resize(gc.dim);
          rng.fill_normal(ex.x0);
          ex.condition = set == &sets.ref_set ? 0 : 1;
          set->push_back(std::move(ex));
        }
      const double err = grad_check(model, kLosses.at(gc.loss), sets, schedule, rng.next_u64(), gc.epsilon,
                                    &reference, cfg.sandbox.kl_weight);
      std::cout << gc.loss << " max_relative_error " << err << " parameters " << model.parameter_count()
                << "\n";
      return err < gc.tolerance ? 0 : 2;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    return run();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
