#pragma once

// Pipeline configuration: flat `key = value` text with dotted section names.
// Precedence is command line > file > built-in default.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyperdet/bev.hpp"
#include "hyperdet/enhance.hpp"
#include "hyperdet/fusion.hpp"
#include "hyperdet/metrics.hpp"
#include "hyperdet/supervision.hpp"
#include "hyperdet/validation.hpp"

namespace hyperdet {

struct SynthSettings {
  std::size_t num_keyframes = 20;
  std::size_t num_objects = 8;
  double rear_fov_deg = 120.0;
  double rear_fov_effective_deg = 100.0;
  double radar_noise = 0.05;
  double lidar_noise = 0.02;
  double radar_density = 0.5;
  double lidar_density_multiplier = 20.0;
  std::size_t ghosts_per_sweep = 2;
  std::size_t clutter_per_sweep = 2;
  double ego_speed = 5.0;
  double ego_yaw_rate = 0.05;
};

struct PipelineConfig {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 42;
  int jobs = 1;
  std::filesystem::path scene_path;  // empty: generated by the synth stage

  SynthSettings synth;
  fusion::WindowSpec window;  // keyframe_t is filled per frame
  validation::ValidationParams validation;
  bool validation_enabled = true;
  bev::GridSpec grid;
  supervision::GroundParams ground;
  enhance::EnhancerSpec enhancer;
  bool union_raw = false;
  int tau_int = 60;
  double fscore_tau = 0.2;
  bool cd_root = false;
  metrics::DetEvalConfig eval;
  std::filesystem::path pred_path;
  std::filesystem::path gt_path;  // empty: <out>/boxes/gt.jsonl

  void check() const;
};

/// Sets one dotted key. Throws kConfig for unknown keys or bad values.
void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const PipelineConfig& cfg, std::string_view key);
std::vector<std::string> config_keys();

/// Applies every `key = value` line; '#' starts a comment line.
void apply_config_text(PipelineConfig& cfg, std::string_view text, std::string_view origin);
void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path);
/// Canonical dump of every key in declaration order.
std::string config_to_text(const PipelineConfig& cfg);

}  // namespace hyperdet
