#pragma once

// Multi-radar alignment into the reference frame and ego-motion compensated
// accumulation of past sweeps into the keyframe.

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "hyperdet/core.hpp"

namespace hyperdet::fusion {

struct WindowSpec {
  double window_seconds = 0.5;
  double frame_rate = 20.0;
  double keyframe_t = 0.0;

  /// round(window_seconds * frame_rate) + 1: k past sweeps plus the keyframe.
  std::size_t sweep_count() const;
  void check() const;
};

struct AlignResult {
  PointCloud cloud;  // reference frame
  std::size_t retained = 0;
  std::size_t culled = 0;
};

/// Culls points outside the sensor's effective field of view (sensor-frame
/// azimuth), then maps the rest through the extrinsic. Throws kInvalidArgument
/// when the sweep's frame label is not the sensor's frame.
AlignResult align_to_reference(const PointCloud& sweep, const SensorConfig& sensor,
                               std::string_view reference_frame = "reference");

/// Timestamped ego poses (reference -> world).
struct EgoPoseTable {
  std::vector<std::pair<double, RigidTransform>> poses;

  /// Throws kMissingArtifact naming tau when no pose matches within 1e-9 s.
  const RigidTransform& at(double tau) const;
};

/// Sweep key: (sensor id, sweep time).
using SweepKey = std::pair<int, double>;

/// Maps every sweep inside [t - k/f, t] by E(t)^-1 * E(tau) and returns
/// the multiset union ordered by (sensor id, tau, original index). Sweeps
/// outside the window are ignored.
PointCloud compensate_and_accumulate(const std::map<SweepKey, PointCloud>& sweeps,
                                     const EgoPoseTable& ego_poses,
                                     const WindowSpec& window);

/// Sweep times belonging to the window, oldest first, chosen from `available`.
std::vector<double> window_times(const std::vector<double>& available,
                                 const WindowSpec& window);

}  // namespace hyperdet::fusion
