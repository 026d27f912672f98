#include "hyperdet/supervision.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "hyperdet/error.hpp"

namespace hyperdet::supervision {

namespace {

struct Plane {
  Vec3 normal;
  double offset;
};

std::size_t count_inliers(const PointCloud& c, const Plane& pl, double tol) {
  std::size_t n = 0;
  for (const RadarPoint& p : c.points) {
    if (std::abs(pl.normal.dot(p.position()) - pl.offset) <= tol) ++n;
  }
  return n;
}

std::optional<Plane> refit(const PointCloud& c, const Plane& pl, double tol) {
  Vec3 mean = Vec3::Zero();
  std::size_t n = 0;
  for (const RadarPoint& p : c.points) {
    if (std::abs(pl.normal.dot(p.position()) - pl.offset) <= tol) {
      mean += p.position();
      ++n;
    }
  }
  if (n < 3) return std::nullopt;
  mean /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (const RadarPoint& p : c.points) {
    if (std::abs(pl.normal.dot(p.position()) - pl.offset) <= tol) {
      const Vec3 d = p.position() - mean;
      cov += d * d.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  Vec3 normal = solver.eigenvectors().col(0);
  if (normal.z() < 0.0) normal = -normal;
  return Plane{normal, normal.dot(mean)};
}

}  // namespace

void GroundParams::check() const {
  if (!(inlier_tol > 0.0)) fail(ErrorCode::kConfig, "ground inlier_tol must be > 0");
  if (ransac_iters < 1) fail(ErrorCode::kConfig, "ground ransac_iters must be >= 1");
}

GroundResult remove_ground(const PointCloud& lidar, const GroundParams& params) {
  params.check();
  GroundResult res;
  res.cloud.frame_id = lidar.frame_id;
  res.is_ground.assign(lidar.size(), 0);
  if (lidar.empty()) return res;

  std::optional<Plane> plane;
  if (params.method == GroundMethod::kPlaneRansac && lidar.size() >= 3) {
    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<std::size_t> pick(0, lidar.size() - 1);
    std::size_t best_count = 0;
    for (int it = 0; it < params.ransac_iters; ++it) {
      const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
      if (a == b || b == c || a == c) continue;
      const Vec3 pa = lidar.points[a].position();
      Vec3 n = (lidar.points[b].position() - pa).cross(lidar.points[c].position() - pa);
      const double norm = n.norm();
      if (!(norm > 1e-12)) continue;
      n /= norm;
      if (std::abs(n.z()) <= params.min_vertical_alignment) continue;
      if (n.z() < 0.0) n = -n;
      const Plane candidate{n, n.dot(pa)};
      const std::size_t count = count_inliers(lidar, candidate, params.inlier_tol);
      if (count > best_count) {
        best_count = count;
        plane = candidate;
      }
    }
    if (plane) {
      const auto refined = refit(lidar, *plane, params.inlier_tol);
      if (refined && std::abs(refined->normal.z()) > params.min_vertical_alignment &&
          count_inliers(lidar, *refined, params.inlier_tol) >= best_count) {
        plane = refined;
      }
    }
  }

  if (plane) {
    res.normal = plane->normal;
    res.offset = plane->offset;
  } else {
    res.used_fallback = params.method == GroundMethod::kPlaneRansac;
  }
  for (std::size_t i = 0; i < lidar.size(); ++i) {
    const RadarPoint& p = lidar.points[i];
    const bool ground = plane ? std::abs(plane->normal.dot(p.position()) - plane->offset) <= params.inlier_tol
                              : p.z < params.z_cut;
    res.is_ground[i] = ground ? 1 : 0;
    if (!ground) res.cloud.points.push_back(p);
  }
  return res;
}

std::map<int, PointCloud> extract_box_foreground(const PointCloud& cloud,
                                                 const std::vector<Box3D>& boxes) {
  std::map<int, PointCloud> out;
  for (const Box3D& box : boxes) {
    box.check();
    PointCloud& fg = out[box.id];
    fg.frame_id = cloud.frame_id;
    for (const RadarPoint& p : cloud.points) {
      if (point_in_box(p.position(), box)) fg.points.push_back(p);
    }
  }
  return out;
}

PseudoForeground make_pseudo_radar_fg(const std::map<int, PointCloud>& lidar_fg,
                                      const PointCloud& radar_validated,
                                      const std::vector<Box3D>& boxes,
                                      double keyframe_t) {
  PseudoForeground out;
  out.cloud.frame_id = radar_validated.frame_id;
  for (const Box3D& box : boxes) {
    BoxAttributes attr;
    double sum_rcs = 0.0;
    double sum_doppler = 0.0;
    for (const RadarPoint& p : radar_validated.points) {
      if (!point_in_box(p.position(), box)) continue;
      sum_rcs += p.rcs;
      sum_doppler += p.doppler;
      ++attr.radar_points;
    }
    if (attr.radar_points > 0) {
      attr.mean_rcs = sum_rcs / static_cast<double>(attr.radar_points);
      attr.mean_doppler = sum_doppler / static_cast<double>(attr.radar_points);
    } else {
      attr.fallback = true;
    }
    out.per_box[box.id] = attr;

    const auto it = lidar_fg.find(box.id);
    if (it == lidar_fg.end()) continue;
    if (out.cloud.frame_id.empty()) out.cloud.frame_id = it->second.frame_id;
    for (const RadarPoint& lp : it->second.points) {
      RadarPoint p;
      p.set_position(lp.position());
      p.rcs = attr.mean_rcs;
      p.doppler = attr.mean_doppler;
      p.sensor_id = kPseudoForegroundSensor;
      p.t = keyframe_t;
      out.cloud.points.push_back(p);
    }
  }
  return out;
}

std::size_t SupervisionTarget::background_count() const {
  std::size_t n = 0;
  for (std::uint8_t m : fg_mask) n += m ? 0 : 1;
  return n;
}

SupervisionTarget inject_foreground(const PointCloud& radar_validated,
                                    const PointCloud& pseudo_fg) {
  if (!radar_validated.empty() && !pseudo_fg.empty() &&
      radar_validated.frame_id != pseudo_fg.frame_id) {
    fail(ErrorCode::kInvalidArgument, "foreground frame '" + pseudo_fg.frame_id +
                                          "' differs from background frame '" +
                                          radar_validated.frame_id + "'");
  }
  SupervisionTarget t;
  t.target_cloud.frame_id = radar_validated.empty() ? pseudo_fg.frame_id : radar_validated.frame_id;
  t.target_cloud.points = radar_validated.points;
  t.target_cloud.points.insert(t.target_cloud.points.end(), pseudo_fg.points.begin(),
                               pseudo_fg.points.end());
  t.fg_mask.assign(radar_validated.size(), 0);
  t.fg_mask.resize(t.target_cloud.size(), 1);
  return t;
}

}  // namespace hyperdet::supervision
