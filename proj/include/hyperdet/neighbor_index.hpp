#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hyperdet/core.hpp"

namespace hyperdet {

/// Squared Euclidean distance, written out so every caller rounds the same way.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Uniform grid hash over 3D positions. Radius queries are exact: a point q
/// is reported iff squared_distance(p, q) <= radius^2.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  NeighborIndex(std::span<const Vec3> points, double cell_size);

  static NeighborIndex build(const PointCloud& cloud, double cell_size);
  /// Index over (x, y, 0) for planar queries.
  static NeighborIndex build_planar(std::span<const Vec2> points, double cell_size);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Indices within `radius` (inclusive), ascending.
  std::vector<std::size_t> radius_query(const Vec3& p, double radius) const;

  /// Number of points within `radius` (inclusive), skipping index `exclude`,
  /// stopping early once `stop_at` is reached.
  std::size_t count_within(const Vec3& p, double radius,
                           std::optional<std::size_t> exclude = std::nullopt,
                           std::size_t stop_at = SIZE_MAX) const;

  /// True when some point lies strictly closer than `radius`.
  bool any_closer_than(const Vec3& p, double radius) const;

  /// Nearest point; ties go to the lowest index. Empty index -> nullopt.
  std::optional<std::size_t> nearest(const Vec3& p) const;

 private:
  struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const CellKey& k) const noexcept {
      std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
      h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
      h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };

  CellKey key_of(const Vec3& p) const;

  /// Calls fn(index) for every point in cells overlapping the axis-aligned
  /// cube [p - radius, p + radius]. fn returns false to stop early.
  template <typename Fn>
  void visit_candidates(const Vec3& p, double radius, Fn&& fn) const;

  double cell_ = 1.0;
  std::vector<Vec3> points_;
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> cells_;
  CellKey lo_{0, 0, 0};
  CellKey hi_{-1, -1, -1};
};

}  // namespace hyperdet
