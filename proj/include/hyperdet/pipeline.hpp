#pragma once

// Stage orchestration over a fixed on-disk layout rooted at the output
// directory. Every stage reads its inputs from upstream artifacts, so any
// stage can be rerun on its own.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperdet/config.hpp"

namespace hyperdet::pipeline {

namespace fs = std::filesystem;

using LogFn = std::function<void(std::string_view)>;

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "synth",     "fuse",     "validate", "rasterize", "make-target", "enhance",
      "lift",      "deraster", "eval-geom", "report-fg", "eval-det"};
  return names;
}

struct StageOptions {
  /// Keyframe indices to process; empty means every keyframe.
  std::vector<std::size_t> frames;
  /// Root holding scene.json, sweeps/, lidar/ and boxes/. Empty: out_dir.
  fs::path synth_root;
  LogFn log;
};

/// Directory layout, one artifact path per (stage, frame).
struct Layout {
  fs::path out;
  fs::path synth;

  explicit Layout(const PipelineConfig& cfg, const StageOptions& opt = {});

  fs::path scene() const;
  fs::path sweep(std::size_t timestamp_index, int sensor_id) const;
  fs::path sweep_labels(std::size_t timestamp_index, int sensor_id) const;
  fs::path lidar(std::size_t frame) const;
  fs::path lidar_labels(std::size_t frame) const;
  fs::path boxes(std::size_t frame) const;
  fs::path gt() const;
  fs::path fused(std::size_t frame) const;
  fs::path fused_labels(std::size_t frame) const;
  fs::path fused_report(std::size_t frame) const;
  fs::path fused_raw(std::size_t frame) const;
  fs::path validated(std::size_t frame) const;
  fs::path keep(std::size_t frame) const;
  fs::path validation_summary(std::size_t frame) const;
  fs::path bev(std::size_t frame) const;
  fs::path target(std::size_t frame) const;
  fs::path target_mask(std::size_t frame) const;
  fs::path target_pgm(std::size_t frame) const;
  fs::path target_boxes(std::size_t frame) const;
  fs::path enhanced(std::size_t frame) const;
  fs::path hyper(std::size_t frame) const;
  fs::path deraster(std::size_t frame) const;
  fs::path work(std::size_t frame) const;
  fs::path geom_report() const;
  fs::path det_report() const;
  fs::path fg_report() const;
  fs::path manifest() const;
};

std::string frame_label(std::size_t frame);

/// Runs one named stage. Throws kInvalidArgument for unknown names and
/// kMissingArtifact when an upstream file is absent. The manifest is
/// refreshed afterwards. Returns the stage's human-readable report, if any.
std::string run_stage(std::string_view name, const PipelineConfig& cfg,
                      const StageOptions& opt = {});

/// synth through report-fg; eval-det too when a prediction file is set.
std::string run_all(const PipelineConfig& cfg, const StageOptions& opt = {});

/// Sorted `<sha256>  <relative path>` lines for every file under the output
/// directory except work/ and the manifest itself.
std::string build_manifest(const fs::path& out_dir);
std::string write_manifest(const fs::path& out_dir);
std::string sha256_hex(std::string_view bytes);

struct AblationAxes {
  bool no_accumulation = false;
  bool no_validation = false;
  std::vector<enhance::EnhancerKind> enhancers;
  std::vector<int> thresholds;
};

/// Comma-separated axis list, e.g. "no-validation,enhancer=passthrough|oracle,threshold=60|200".
AblationAxes parse_axes(std::string_view text);

struct AblationRow {
  std::string name;
  bool accumulation = true;
  bool validation = true;
  enhance::EnhancerKind enhancer = enhance::EnhancerKind::kPassthrough;
  int threshold = 60;
  std::size_t fused_points = 0;
  std::size_t validated_points = 0;
  std::size_t surviving_true = 0;
  std::size_t surviving_ghost = 0;
  std::size_t surviving_clutter = 0;
  std::size_t hyper_points = 0;
  std::optional<double> chamfer;
  std::optional<double> hausdorff;
  std::optional<double> fscore;
  double fg_raw_avg = 0.0;
  double fg_added_avg = 0.0;
  std::optional<double> fg_boost;
};

/// One pipeline run per cell of the axis product (baseline first), sharing a
/// single synth output. Writes <out>/ablation.csv.
std::vector<AblationRow> run_ablation(const PipelineConfig& cfg, const AblationAxes& axes,
                                      const StageOptions& opt = {});
std::string ablation_csv(const std::vector<AblationRow>& rows);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. When several calls
/// throw, the exception of the lowest index is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace hyperdet::pipeline
