#include "hyperdet/fusion.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "hyperdet/error.hpp"

namespace hyperdet::fusion {

namespace {

constexpr double kTimeTol = 1e-9;

std::string time_str(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  return buf;
}

}  // namespace

std::size_t WindowSpec::sweep_count() const {
  return static_cast<std::size_t>(std::llround(window_seconds * frame_rate)) + 1;
}

void WindowSpec::check() const {
  if (!(window_seconds >= 0.0)) fail(ErrorCode::kConfig, "window_seconds must be >= 0");
  if (!(frame_rate > 0.0)) fail(ErrorCode::kConfig, "frame_rate must be > 0");
}

AlignResult align_to_reference(const PointCloud& sweep, const SensorConfig& sensor,
                               std::string_view reference_frame) {
  const std::string expected = "sensor_" + std::to_string(sensor.sensor_id);
  if (sweep.frame_id != expected) {
    fail(ErrorCode::kInvalidArgument, "sweep frame '" + sweep.frame_id +
                                          "' does not match sensor frame '" + expected + "'");
  }
  PointCloud kept;
  kept.frame_id = sweep.frame_id;
  AlignResult res;
  for (const RadarPoint& p : sweep.points) {
    if (within_fov(p.position(), sensor.fov_effective_deg)) {
      kept.points.push_back(p);
    } else {
      ++res.culled;
    }
  }
  res.retained = kept.size();
  res.cloud = apply_transform(sensor.extrinsic, kept, reference_frame);
  return res;
}

const RigidTransform& EgoPoseTable::at(double tau) const {
  for (const auto& [t, pose] : poses) {
    if (std::abs(t - tau) < kTimeTol) return pose;
  }
  fail(ErrorCode::kMissingArtifact, "missing ego pose for tau=" + time_str(tau));
}

std::vector<double> window_times(const std::vector<double>& available,
                                 const WindowSpec& window) {
  const std::size_t k = window.sweep_count() - 1;
  std::vector<double> out;
  for (std::size_t j = 0; j <= k; ++j) {
    const double tau = window.keyframe_t - static_cast<double>(k - j) / window.frame_rate;
    for (double a : available) {
      if (std::abs(a - tau) < 1e-6) {
        out.push_back(a);
        break;
      }
    }
  }
  return out;
}

PointCloud compensate_and_accumulate(const std::map<SweepKey, PointCloud>& sweeps,
                                     const EgoPoseTable& ego_poses,
                                     const WindowSpec& window) {
  window.check();
  const double span = static_cast<double>(window.sweep_count() - 1) / window.frame_rate;
  const double t_lo = window.keyframe_t - span - 1e-6;
  const double t_hi = window.keyframe_t + 1e-6;
  const RigidTransform& key_pose = ego_poses.at(window.keyframe_t);

  PointCloud out;
  std::string frame;
  // std::map orders keys by (sensor id, tau), which is the canonical order.
  for (const auto& [key, cloud] : sweeps) {
    const double tau = key.second;
    if (tau < t_lo || tau > t_hi) continue;
    if (frame.empty()) frame = cloud.frame_id;
    if (cloud.frame_id != frame) {
      fail(ErrorCode::kInvalidArgument, "sweeps are in different frames: '" + frame + "' vs '" +
                                            cloud.frame_id + "'");
    }
    // Poses are reference -> world, so E(t)^-1 * E(tau) takes the reference
    // frame at tau into the keyframe's reference frame.
    const RigidTransform& pose = ego_poses.at(tau);
    if (pose.rotation() == key_pose.rotation() && pose.translation() == key_pose.translation()) {
      out.points.insert(out.points.end(), cloud.points.begin(), cloud.points.end());
      continue;
    }
    const RigidTransform rel = compose(invert(key_pose), pose);
    const PointCloud moved = apply_transform(rel, cloud, cloud.frame_id);
    out.points.insert(out.points.end(), moved.points.begin(), moved.points.end());
  }
  out.frame_id = frame.empty() ? std::string("reference") : frame;
  return out;
}

}  // namespace hyperdet::fusion
