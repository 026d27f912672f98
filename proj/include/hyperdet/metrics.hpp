#pragma once

// Set-to-set geometric fidelity, foreground-boost accounting and
// center-distance average precision.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperdet/core.hpp"

namespace hyperdet::metrics {

using PointSet = std::span<const Vec2>;

/// Mean over A of min squared distance to B plus the same from B to A.
/// With `root`, unsquared nearest distances are averaged instead.
double chamfer(PointSet a, PointSet b, bool root = false);
double hausdorff(PointSet a, PointSet b);
/// Precision treats A as the prediction, recall is taken over B.
double fscore(PointSet a, PointSet b, double tau_match);

struct GeomReport {
  double chamfer = 0.0;
  double hausdorff = 0.0;
  double fscore = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double match_tau = 0.2;
  bool chamfer_root = false;
};

GeomReport geometry_report(PointSet pred, PointSet target, double tau_match,
                           bool chamfer_root = false);

// --- Foreground boost ------------------------------------------------------

struct FgFrame {
  PointCloud raw;
  PointCloud enhanced;
  std::vector<Box3D> boxes;
};

struct FgRow {
  std::string name;
  double raw_avg = 0.0;    // mean in-box raw count per frame
  double added_avg = 0.0;  // mean (enhanced - raw) per frame
  std::optional<double> boost;  // mean per-frame ratio; empty = n/a
  std::size_t frames = 0;       // frames containing the category
};

/// One row per category (frames without that category are skipped), then a
/// "total" row over all listed categories. The boost is the mean of
/// per-frame ratios over frames with a non-zero raw count.
std::vector<FgRow> fg_boost_report(std::span<const FgFrame> frames,
                                   std::span<const Category> categories);
std::string fg_report_csv(const std::vector<FgRow>& rows);
std::string fg_report_table(const std::vector<FgRow>& rows);

// --- Detection AP ------------------------------------------------------------

struct Detection {
  std::string frame_id;
  Category category = Category::kCar;
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  double yaw = 0.0;
  double score = 1.0;
};

enum class ApMethod {
  kNuScenes,    // recall >= 0.1, precision - 0.1 clipped, normalized by 0.9
  kInterp101,   // 101-point interpolated (precision envelope)
};

struct DetEvalConfig {
  std::vector<double> dist_thresholds = {0.5, 1.0, 2.0, 4.0};
  double max_range = 50.0;
  std::vector<Category> categories = {kAllCategories.begin(), kAllCategories.end()};
  ApMethod method = ApMethod::kNuScenes;

  void check() const;
};

/// nullopt when the category has no ground truth inside max_range.
std::optional<double> average_precision(std::span<const Detection> preds,
                                        std::span<const Detection> gts, double dist,
                                        Category category, const DetEvalConfig& cfg);

struct MapReport {
  double map = 0.0;
  std::map<Category, std::map<double, double>> ap;  // evaluated categories only
  std::vector<std::string> warnings;
};

MapReport map_score(std::span<const Detection> preds, std::span<const Detection> gts,
                    const DetEvalConfig& cfg);
std::string map_report_csv(const MapReport& r, const DetEvalConfig& cfg);
std::string map_report_table(const MapReport& r, const DetEvalConfig& cfg);

Detection detection_from_box(const Box3D& box, std::string frame_id, double score = 1.0);

/// One JSON object per line: frame_id, category, center, size, yaw, score.
std::string detections_to_jsonl(std::span<const Detection> dets);
std::vector<Detection> detections_from_jsonl(std::string_view text, std::string_view origin);
std::vector<Detection> read_detections(const std::filesystem::path& path);
void write_detections(std::span<const Detection> dets, const std::filesystem::path& path);

/// Boxes JSON lines (with id and velocity) used for per-frame annotations.
std::string boxes_to_jsonl(std::span<const Box3D> boxes, std::string_view frame_id);
std::vector<Box3D> boxes_from_jsonl(std::string_view text, std::string_view origin);

}  // namespace hyperdet::metrics
