#include "mudikit/config.hpp"

#include <cmath>
#include <optional>
#include <set>

#include "json.hpp"
#include "mudikit/error.hpp"
#include "mudikit/io.hpp"

namespace mudikit {

using nlohmann::json;

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::cosine ? "cosine" : "linear"; }
std::string to_string(RowSortRule rule) {
  return rule == RowSortRule::greedy_global ? "greedy_global" : "column_sequential";
}
std::string to_string(InitVariant variant) {
  return variant == InitVariant::mean_shift ? "mean_shift" : "forward_noise";
}
std::string to_string(LayoutSource source) { return source == LayoutSource::random ? "random" : "file"; }

void SandboxConfig::validate() const {
  require(steps >= 2, ErrorCode::parameter, "sandbox.steps must be >= 2");
  require(lambda >= 0.0, ErrorCode::parameter, "sandbox.lambda must be >= 0");
  require(kl_weight >= 0.0, ErrorCode::parameter, "sandbox.kl_weight must be >= 0");
  require(batch_size >= 1, ErrorCode::parameter, "sandbox.batch_size must be >= 1");
  require(learning_rate > 0.0, ErrorCode::parameter, "sandbox.learning_rate must be > 0");
  require(tau > 0.0, ErrorCode::parameter, "sandbox.tau must be > 0");
  require(sample_steps >= 1 && sample_steps <= steps, ErrorCode::parameter,
          "sandbox.sample_steps must be in [1, steps]");
  require(!sweep_gammas.empty(), ErrorCode::parameter, "sandbox.sweep_gammas must be nonempty");
  for (double g : sweep_gammas)
    require(g >= 0.0, ErrorCode::parameter, "sandbox.sweep_gammas entries must be >= 0");
  require(sweep_eta >= 0.0 && sweep_eta <= 1.0, ErrorCode::parameter, "sandbox.sweep_eta must be in [0, 1]");
  require(sweep_trials >= 1, ErrorCode::parameter, "sandbox.sweep_trials must be >= 1");
  require(mixture_weights.size() == 3, ErrorCode::parameter,
          "sandbox.mixture_weights needs 3 entries (target, swapped, mixed)");
  double sum = 0.0;
  for (double w : mixture_weights) {
    require(w > 0.0, ErrorCode::parameter, "sandbox.mixture_weights entries must be > 0");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::parameter, "sandbox.mixture_weights must sum to 1");
}

void RunConfig::validate() const {
  segmix.validate();
  init.validate();
  require(dnc.detection_threshold > 0.0 && dnc.detection_threshold < 1.0, ErrorCode::parameter,
          "dnc.detection_threshold must be in (0, 1)");
  sandbox.validate();
}

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) return;
    require(doc.is_object(), ErrorCode::validation, "'" + path_ + "' must be an object");
    obj_ = &doc;
  }

  template <typename T>
  void get(const char* key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::validation, "'" + qualified(key) + "' has the wrong type");
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& out) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    T value{};
    try {
      value = v->get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::validation, "'" + qualified(key) + "' has the wrong type");
    }
    out = std::move(value);
  }

  template <typename E>
  void get_enum(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    const json* v = find(key);
    if (!v) return;
    require(v->is_string(), ErrorCode::validation, "'" + qualified(key) + "' must be a string");
    const auto s = v->get<std::string>();
    for (const auto& [name, value] : names)
      if (s == name) {
        out = value;
        return;
      }
    fail(ErrorCode::validation, "'" + qualified(key) + "' has unknown value '" + s + "'");
  }

  const json& child(const char* key) {
    static const json null_json;
    const json* v = find(key);
    return v ? *v : null_json;
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items())
      require(seen_.contains(key), ErrorCode::strict_schema, "unknown config key '" + qualified(key) + "'");
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    if (!obj_) return nullptr;
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  const json* obj_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

void read_pair(Section& s, const char* key, int& a, int& b) {
  std::vector<int> v{a, b};
  s.get(key, v);
  require(v.size() == 2, ErrorCode::validation, "'" + s.qualified(key) + "' must be [height, width]");
  a = v[0];
  b = v[1];
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::format, std::string("config JSON: ") + e.what());
  }
  RunConfig c;
  Section root(doc, "");

  Section seg(root.child("segmix"), "segmix");
  read_pair(seg, "out_size", c.segmix.out_height, c.segmix.out_width);
  seg.get("max_margin", c.segmix.max_margin);
  seg.get("scales", c.segmix.scales);
  seg.get("random_scale_min", c.segmix.random_scale_min);
  seg.get("random_scale_max", c.segmix.random_scale_max);
  seg.get("seg_mix_prob", c.segmix.seg_mix_prob);
  seg.get("background_value", c.segmix.background_value);
  Section prompt(seg.child("prompt"), "segmix.prompt");
  prompt.get("composite_template", c.segmix.prompt.composite_template);
  prompt.get("prefix_count", c.segmix.prompt.prefix_count);
  prompt.get("count_noun", c.segmix.prompt.count_noun);
  prompt.finish();
  seg.finish();

  Section init(root.child("init"), "init");
  init.get("gamma", c.init.gamma);
  init.get("noise_seed", c.init.noise_seed);
  init.get_enum("layout_source", c.init.layout_source,
                {{"random", LayoutSource::random}, {"file", LayoutSource::file}});
  init.get_enum("variant", c.init.variant,
                {{"mean_shift", InitVariant::mean_shift}, {"forward_noise", InitVariant::forward_noise}});
  read_pair(init, "canvas", c.init.canvas_height, c.init.canvas_width);
  init.get("max_margin", c.init.max_margin);
  init.get("downscale_factor", c.init.downscale_factor);
  init.finish();

  Section dnc(root.child("dnc"), "dnc");
  dnc.get_enum("row_sort", c.dnc.row_sort,
               {{"greedy_global", RowSortRule::greedy_global},
                {"column_sequential", RowSortRule::column_sequential}});
  dnc.get("detection_threshold", c.dnc.detection_threshold);
  dnc.finish();

  Section sb(root.child("sandbox"), "sandbox");
  const std::initializer_list<std::pair<const char*, ScheduleKind>> kinds = {
      {"cosine", ScheduleKind::cosine}, {"linear", ScheduleKind::linear}};
  sb.get("steps", c.sandbox.steps);
  sb.get_enum("schedule", c.sandbox.schedule, kinds);
  sb.get("lambda", c.sandbox.lambda);
  sb.get("kl_weight", c.sandbox.kl_weight);
  sb.get("batch_size", c.sandbox.batch_size);
  sb.get("learning_rate", c.sandbox.learning_rate);
  sb.get("tau", c.sandbox.tau);
  sb.get("sample_steps", c.sandbox.sample_steps);
  sb.get("sweep_gammas", c.sandbox.sweep_gammas);
  sb.get("sweep_trials", c.sandbox.sweep_trials);
  sb.get("sweep_eta", c.sandbox.sweep_eta);
  sb.get("mixture_weights", c.sandbox.mixture_weights);
  sb.finish();

  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

std::string config_to_json(const RunConfig& c) {
  json doc;
  doc["segmix"] = {
      {"out_size", {c.segmix.out_height, c.segmix.out_width}},
      {"max_margin", c.segmix.max_margin},
      {"scales", c.segmix.scales ? json(*c.segmix.scales) : json(nullptr)},
      {"random_scale_min", c.segmix.random_scale_min},
      {"random_scale_max", c.segmix.random_scale_max},
      {"seg_mix_prob", c.segmix.seg_mix_prob},
      {"background_value", c.segmix.background_value},
      {"prompt",
       {{"composite_template", c.segmix.prompt.composite_template},
        {"prefix_count", c.segmix.prompt.prefix_count},
        {"count_noun", c.segmix.prompt.count_noun}}}};
  doc["init"] = {{"gamma", c.init.gamma},
                 {"noise_seed", c.init.noise_seed},
                 {"layout_source", to_string(c.init.layout_source)},
                 {"variant", to_string(c.init.variant)},
                 {"canvas", {c.init.canvas_height, c.init.canvas_width}},
                 {"max_margin", c.init.max_margin},
                 {"downscale_factor", c.init.downscale_factor}};
  doc["dnc"] = {{"row_sort", to_string(c.dnc.row_sort)},
                {"detection_threshold", c.dnc.detection_threshold}};
  doc["sandbox"] = {{"steps", c.sandbox.steps},
                    {"schedule", to_string(c.sandbox.schedule)},
                    {"lambda", c.sandbox.lambda},
                    {"kl_weight", c.sandbox.kl_weight},
                    {"batch_size", c.sandbox.batch_size},
                    {"learning_rate", c.sandbox.learning_rate},
                    {"tau", c.sandbox.tau},
                    {"sample_steps", c.sandbox.sample_steps},
                    {"sweep_gammas", c.sandbox.sweep_gammas},
                    {"sweep_trials", c.sandbox.sweep_trials},
                    {"sweep_eta", c.sandbox.sweep_eta},
                    {"mixture_weights", c.sandbox.mixture_weights}};
  return doc.dump(2) + "\n";
}

}  // namespace mudikit
