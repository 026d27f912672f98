#pragma once

// Training-target construction from a dense LiDAR sweep: ground removal,
// in-box foreground extraction, box-mean radar attributes and injection
// into the validated radar background.

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "hyperdet/core.hpp"

namespace hyperdet::supervision {

enum class GroundMethod { kPlaneRansac, kZThreshold };

struct GroundParams {
  GroundMethod method = GroundMethod::kPlaneRansac;
  double z_cut = 0.15;  // z_threshold: remove z < z_cut
  int ransac_iters = 200;
  double inlier_tol = 0.15;
  /// Minimum |n . z| for an acceptable ground plane.
  double min_vertical_alignment = 0.9;
  std::uint64_t seed = 0;

  void check() const;
};

struct GroundResult {
  PointCloud cloud;              // non-ground points, input order
  std::vector<std::uint8_t> is_ground;
  bool used_fallback = false;    // plane fit failed; z threshold applied
  Vec3 normal = Vec3::UnitZ();   // fitted plane n . x = offset
  double offset = 0.0;
};

GroundResult remove_ground(const PointCloud& lidar, const GroundParams& params);

/// box id -> points inside that box. A point inside two boxes appears in both.
std::map<int, PointCloud> extract_box_foreground(const PointCloud& cloud,
                                                 const std::vector<Box3D>& boxes);

struct BoxAttributes {
  double mean_rcs = 0.0;
  double mean_doppler = 0.0;
  std::size_t radar_points = 0;
  bool fallback = false;  // no validated radar point inside the box
};

struct PseudoForeground {
  PointCloud cloud;
  std::map<int, BoxAttributes> per_box;
};

/// Assigns each box's mean validated-radar rcs/doppler to its LiDAR
/// foreground. Boxes without radar support get rcs = 0, doppler = 0 and are
/// flagged. Pseudo points carry sensor id -1 and time `keyframe_t`.
PseudoForeground make_pseudo_radar_fg(const std::map<int, PointCloud>& lidar_fg,
                                      const PointCloud& radar_validated,
                                      const std::vector<Box3D>& boxes,
                                      double keyframe_t);

struct SupervisionTarget {
  PointCloud target_cloud;
  std::vector<std::uint8_t> fg_mask;  // 1 = injected foreground

  std::size_t background_count() const;
};

/// Background first (untouched), then the pseudo foreground.
SupervisionTarget inject_foreground(const PointCloud& radar_validated,
                                    const PointCloud& pseudo_fg);

}  // namespace hyperdet::supervision
