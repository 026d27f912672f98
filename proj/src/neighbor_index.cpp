#include "hyperdet/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hyperdet/error.hpp"

namespace hyperdet {

NeighborIndex::NeighborIndex(std::span<const Vec3> points, double cell_size)
    : cell_(cell_size), points_(points.begin(), points.end()) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    fail(ErrorCode::kInvalidArgument, "neighbor index cell size must be positive");
  }
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kInvalidArgument, "too many points for neighbor index");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite()) {
      fail(ErrorCode::kInvalidArgument, "non-finite point at index " + std::to_string(i));
    }
    const CellKey k = key_of(points_[i]);
    if (i == 0) {
      lo_ = hi_ = k;
    } else {
      lo_ = {std::min(lo_.x, k.x), std::min(lo_.y, k.y), std::min(lo_.z, k.z)};
      hi_ = {std::max(hi_.x, k.x), std::max(hi_.y, k.y), std::max(hi_.z, k.z)};
    }
    cells_[k].push_back(static_cast<std::uint32_t>(i));
  }
}

NeighborIndex NeighborIndex::build(const PointCloud& cloud, double cell_size) {
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const RadarPoint& p : cloud.points) pts.push_back(p.position());
  return NeighborIndex(pts, cell_size);
}

NeighborIndex NeighborIndex::build_planar(std::span<const Vec2> points, double cell_size) {
  std::vector<Vec3> pts;
  pts.reserve(points.size());
  for (const Vec2& p : points) pts.emplace_back(p.x(), p.y(), 0.0);
  return NeighborIndex(pts, cell_size);
}

NeighborIndex::CellKey NeighborIndex::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_))};
}

template <typename Fn>
void NeighborIndex::visit_candidates(const Vec3& p, double radius, Fn&& fn) const {
  if (points_.empty()) return;
  // Padded so rounding in the squared-distance test cannot reach past the
  // candidate cells.
  const Vec3 r = Vec3::Constant(radius * (1.0 + 1e-9) + 1e-12);
  CellKey a = key_of(p - r);
  CellKey b = key_of(p + r);
  a = {std::max(a.x, lo_.x), std::max(a.y, lo_.y), std::max(a.z, lo_.z)};
  b = {std::min(b.x, hi_.x), std::min(b.y, hi_.y), std::min(b.z, hi_.z)};
  if (a.x > b.x || a.y > b.y || a.z > b.z) return;
  const double volume = static_cast<double>(b.x - a.x + 1) * static_cast<double>(b.y - a.y + 1) *
                        static_cast<double>(b.z - a.z + 1);
  if (volume > static_cast<double>(cells_.size())) {
    for (const auto& [key, members] : cells_) {
      if (key.x < a.x || key.x > b.x || key.y < a.y || key.y > b.y || key.z < a.z || key.z > b.z) {
        continue;
      }
      for (std::uint32_t i : members) {
        if (!fn(static_cast<std::size_t>(i))) return;
      }
    }
    return;
  }
  for (std::int64_t x = a.x; x <= b.x; ++x) {
    for (std::int64_t y = a.y; y <= b.y; ++y) {
      for (std::int64_t z = a.z; z <= b.z; ++z) {
        const auto it = cells_.find({x, y, z});
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) {
          if (!fn(static_cast<std::size_t>(i))) return;
        }
      }
    }
  }
}

std::vector<std::size_t> NeighborIndex::radius_query(const Vec3& p, double radius) const {
  std::vector<std::size_t> out;
  if (radius < 0.0) return out;
  const double r2 = radius * radius;
  visit_candidates(p, radius, [&](std::size_t i) {
    if (squared_distance(p, points_[i]) <= r2) out.push_back(i);
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t NeighborIndex::count_within(const Vec3& p, double radius,
                                        std::optional<std::size_t> exclude,
                                        std::size_t stop_at) const {
  std::size_t n = 0;
  if (radius < 0.0 || stop_at == 0) return 0;
  const double r2 = radius * radius;
  visit_candidates(p, radius, [&](std::size_t i) {
    if (exclude && *exclude == i) return true;
    if (squared_distance(p, points_[i]) <= r2) ++n;
    return n < stop_at;
  });
  return n;
}

bool NeighborIndex::any_closer_than(const Vec3& p, double radius) const {
  bool found = false;
  if (!(radius > 0.0)) return false;
  const double r2 = radius * radius;
  visit_candidates(p, radius, [&](std::size_t i) {
    if (squared_distance(p, points_[i]) < r2) found = true;
    return !found;
  });
  return found;
}

std::optional<std::size_t> NeighborIndex::nearest(const Vec3& p) const {
  if (points_.empty()) return std::nullopt;
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  auto consider = [&](std::size_t i) {
    const double d2 = squared_distance(p, points_[i]);
    if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
      best_d2 = d2;
      best = i;
    }
  };

  const CellKey q = key_of(p);
  const std::int64_t span_x = std::max({q.x - lo_.x, hi_.x - q.x, std::int64_t{0}});
  const std::int64_t span_y = std::max({q.y - lo_.y, hi_.y - q.y, std::int64_t{0}});
  const std::int64_t span_z = std::max({q.z - lo_.z, hi_.z - q.z, std::int64_t{0}});
  const std::int64_t max_ring = std::max({span_x, span_y, span_z});

  for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
    const std::int64_t x0 = std::max(q.x - ring, lo_.x), x1 = std::min(q.x + ring, hi_.x);
    const std::int64_t y0 = std::max(q.y - ring, lo_.y), y1 = std::min(q.y + ring, hi_.y);
    const std::int64_t z0 = std::max(q.z - ring, lo_.z), z1 = std::min(q.z + ring, hi_.z);
    const double box_cells = static_cast<double>(std::max<std::int64_t>(0, x1 - x0 + 1)) *
                             static_cast<double>(std::max<std::int64_t>(0, y1 - y0 + 1)) *
                             static_cast<double>(std::max<std::int64_t>(0, z1 - z0 + 1));
    if (box_cells > 8.0 * static_cast<double>(cells_.size()) + 64.0) {
      // Sparse data far from the query: a linear scan is cheaper.
      for (std::size_t i = 0; i < points_.size(); ++i) consider(i);
      return best;
    }
    for (std::int64_t x = x0; x <= x1; ++x) {
      for (std::int64_t y = y0; y <= y1; ++y) {
        for (std::int64_t z = z0; z <= z1; ++z) {
          const std::int64_t cheb = std::max({std::abs(x - q.x), std::abs(y - q.y), std::abs(z - q.z)});
          if (cheb != ring) continue;
          const auto it = cells_.find({x, y, z});
          if (it == cells_.end()) continue;
          for (std::uint32_t i : it->second) consider(i);
        }
      }
    }
    // Cells beyond this ring are at least ring * cell away from p.
    const double reach = static_cast<double>(ring) * cell_ * (1.0 - 1e-9);
    if (best_d2 < reach * reach) break;
  }
  return best;
}

}  // namespace hyperdet
