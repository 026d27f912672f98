#include "hyperdet/validation.hpp"

#include <string>

#include "hyperdet/error.hpp"
#include "hyperdet/neighbor_index.hpp"

namespace hyperdet::validation {

namespace {

void check_labels(const SensorClouds& clouds) {
  std::string frame;
  for (const auto& [id, cloud] : clouds) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.points[i].sensor_id != id) {
        fail(ErrorCode::kInvalidArgument,
             "point " + std::to_string(i) + " in cloud of sensor " + std::to_string(id) +
                 " carries sensor_id " + std::to_string(cloud.points[i].sensor_id));
      }
    }
    if (cloud.empty()) continue;
    if (frame.empty()) frame = cloud.frame_id;
    if (cloud.frame_id != frame) {
      fail(ErrorCode::kInvalidArgument, "sensor clouds are in different frames: '" + frame +
                                            "' vs '" + cloud.frame_id + "'");
    }
  }
}

// The query point's own slot is excluded, hence k_min - 1 with include_self.
std::size_t required_neighbors(const ValidationParams& p) {
  return static_cast<std::size_t>(p.include_self ? p.k_min - 1 : p.k_min);
}

template <typename CrossFn, typename SelfFn>
ValidationResult run(const SensorClouds& clouds, const ValidationParams& params,
                     CrossFn&& cross, SelfFn&& self) {
  params.check();
  check_labels(clouds);
  ValidationResult res;
  for (const auto& [id, cloud] : clouds) {
    if (!cloud.empty() && res.cloud.frame_id.empty()) res.cloud.frame_id = cloud.frame_id;
    SensorSummary& s = res.per_sensor[id];
    s.input = cloud.size();
    for (std::size_t a = 0; a < cloud.size(); ++a) {
      const bool c = cross(id, cloud.points[a].position());
      const bool keep = c || self(id, a);
      res.keep.push_back(keep ? 1 : 0);
      if (!keep) continue;
      res.cloud.points.push_back(cloud.points[a]);
      ++s.kept;
      if (c) {
        ++s.kept_by_cross;
      } else {
        ++s.kept_by_self_only;
      }
    }
  }
  return res;
}

}  // namespace

void ValidationParams::check() const {
  if (!(tau_d > 0.0)) fail(ErrorCode::kConfig, "validation tau_d must be > 0");
  if (!(r > 0.0)) fail(ErrorCode::kConfig, "validation r must be > 0");
  if (k_min < 1) fail(ErrorCode::kConfig, "validation k_min must be >= 1");
}

SensorClouds split_by_sensor(const PointCloud& merged) {
  SensorClouds out;
  for (const RadarPoint& p : merged.points) {
    PointCloud& c = out[p.sensor_id];
    c.frame_id = merged.frame_id;
    c.points.push_back(p);
  }
  return out;
}

ValidationResult validate(const SensorClouds& clouds, const ValidationParams& params) {
  params.check();
  // One index per sensor and purpose: cross queries use tau_d-sized cells,
  // self queries r-sized cells.
  std::map<int, NeighborIndex> cross_index;
  std::map<int, NeighborIndex> self_index;
  for (const auto& [id, cloud] : clouds) {
    cross_index.emplace(id, NeighborIndex::build(cloud, params.tau_d));
    self_index.emplace(id, NeighborIndex::build(cloud, params.r));
  }
  const std::size_t need = required_neighbors(params);
  return run(
      clouds, params,
      [&](int id, const Vec3& p) {
        for (const auto& [other, index] : cross_index) {
          if (other != id && index.any_closer_than(p, params.tau_d)) return true;
        }
        return false;
      },
      [&](int id, std::size_t a) {
        if (need == 0) return true;
        const NeighborIndex& index = self_index.at(id);
        return index.count_within(index.point(a), params.r, a, need) >= need;
      });
}

ValidationResult validate_bruteforce(const SensorClouds& clouds,
                                     const ValidationParams& params) {
  const double tau2 = params.tau_d * params.tau_d;
  const double r2 = params.r * params.r;
  const std::size_t need = required_neighbors(params);
  return run(
      clouds, params,
      [&](int id, const Vec3& p) {
        for (const auto& [other, cloud] : clouds) {
          if (other == id) continue;
          for (const RadarPoint& q : cloud.points) {
            if (squared_distance(p, q.position()) < tau2) return true;
          }
        }
        return false;
      },
      [&](int id, std::size_t a) {
        const PointCloud& cloud = clouds.at(id);
        const Vec3 p = cloud.points[a].position();
        std::size_t n = 0;
        for (std::size_t b = 0; b < cloud.size(); ++b) {
          if (b != a && squared_distance(p, cloud.points[b].position()) <= r2) ++n;
        }
        return n >= need;
      });
}

}  // namespace hyperdet::validation
