#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mudikit/dnc.hpp"
#include "mudikit/init.hpp"
#include "mudikit/schedule.hpp"
#include "mudikit/segmix.hpp"

namespace mudikit {

struct DncConfig {
  RowSortRule row_sort = RowSortRule::greedy_global;
  /// Foreground threshold of the sandbox component detector.
  double detection_threshold = 0.1;

  friend bool operator==(const DncConfig&, const DncConfig&) = default;
};

struct SandboxConfig {
  int steps = 100;
  ScheduleKind schedule = ScheduleKind::cosine;
  double lambda = 1.0;
  double kl_weight = 1.0;
  int batch_size = 2;
  double learning_rate = 1e-4;
  /// Mixture width of the analytic denoiser.
  double tau = 0.05;
  /// Reverse steps per sample (<= steps).
  int sample_steps = 100;
  std::vector<double> sweep_gammas = {0, 1, 2, 3, 4};
  int sweep_trials = 500;
  /// Sampler noise scale for the sweep. Ancestral sampling (1) re-draws
  /// nearly all of the state in the first steps, so the start carries little
  /// information; the default is the deterministic update (0).
  double sweep_eta = 0.0;
  std::vector<double> mixture_weights = {0.4, 0.4, 0.2};

  void validate() const;

  friend bool operator==(const SandboxConfig&, const SandboxConfig&) = default;
};

/// One JSON document with sections segmix / init / dnc / sandbox. Unknown
/// keys are rejected; missing keys take the defaults above.
struct RunConfig {
  SegMixConfig segmix;
  InitConfig init;
  DncConfig dnc;
  SandboxConfig sandbox;

  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Every field, defaults included. Keys are sorted, two-space indented.
std::string config_to_json(const RunConfig& config);

std::string to_string(ScheduleKind kind);
std::string to_string(RowSortRule rule);
std::string to_string(InitVariant variant);
std::string to_string(LayoutSource source);

}  // namespace mudikit
