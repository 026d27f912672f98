#pragma once

// Cross-sensor consensus plus self-consistency filtering of accumulated
// multi-radar clouds.

#include <cstdint>
#include <map>
#include <vector>

#include "hyperdet/core.hpp"

namespace hyperdet::validation {

struct ValidationParams {
  double tau_d = 10.0;  // cross-sensor distance threshold, strict (<)
  double r = 1.0;       // self-consistency radius, inclusive (<=)
  int k_min = 3;        // minimum same-sensor neighbor count
  /// Count the query point itself in its own neighborhood.
  bool include_self = false;

  void check() const;
};

using SensorClouds = std::map<int, PointCloud>;

struct SensorSummary {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t kept_by_cross = 0;
  std::size_t kept_by_self_only = 0;
};

struct ValidationResult {
  PointCloud cloud;                 // kept points, canonical order
  std::vector<std::uint8_t> keep;   // aligned with concatenation in sensor order
  std::map<int, SensorSummary> per_sensor;
};

/// Splits a merged cloud by sensor id, preserving relative order.
SensorClouds split_by_sensor(const PointCloud& merged);

/// Grid-indexed implementation. Throws kInvalidArgument when a point's
/// sensor id disagrees with its map key.
ValidationResult validate(const SensorClouds& clouds, const ValidationParams& params);

/// Exhaustive pairwise scan with the same contract; the reference for
/// `validate`.
ValidationResult validate_bruteforce(const SensorClouds& clouds,
                                     const ValidationParams& params);

}  // namespace hyperdet::validation
