#include "hyperdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "hyperdet/error.hpp"
#include "hyperdet/io.hpp"
#include "json.hpp"

namespace hyperdet::synth {

namespace {

using Rng = std::mt19937_64;
using ordered_json = nlohmann::ordered_json;

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kRcsJitterDb = 1.0;
constexpr double kGhostRcsDropDb = 6.0;
constexpr int kLidarSensorId = -3;
constexpr double kPlacementMargin = 0.5;
constexpr int kArtifactRetries = 1000;
// Clutter height band relative to the sensor.
constexpr double kClutterZLow = -1.0;
constexpr double kClutterZHigh = 2.0;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

/// floor(x) plus a Bernoulli draw on the fractional part.
std::size_t stochastic_round(Rng& rng, double x) {
  const double fl = std::floor(x);
  std::size_t n = static_cast<std::size_t>(fl);
  if (uniform(rng, 0.0, 1.0) < x - fl) ++n;
  return n;
}

std::string timestamp_key(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  return buf;
}

// Separating-axis overlap test for two BEV rectangles, each grown by margin.
bool bev_overlap(const Box3D& a, const Box3D& b, double margin) {
  auto axes = [](const Box3D& box) {
    return std::array<Vec2, 2>{Vec2(std::cos(box.yaw), std::sin(box.yaw)),
                               Vec2(-std::sin(box.yaw), std::cos(box.yaw))};
  };
  const auto aa = axes(a);
  const auto ba = axes(b);
  const Vec2 d = (b.center - a.center).head<2>();
  const Vec2 ha(0.5 * a.size.x() + margin, 0.5 * a.size.y() + margin);
  const Vec2 hb(0.5 * b.size.x() + margin, 0.5 * b.size.y() + margin);
  for (const auto& axis : {aa[0], aa[1], ba[0], ba[1]}) {
    const double ra = ha.x() * std::abs(aa[0].dot(axis)) + ha.y() * std::abs(aa[1].dot(axis));
    const double rb = hb.x() * std::abs(ba[0].dot(axis)) + hb.y() * std::abs(ba[1].dot(axis));
    if (std::abs(d.dot(axis)) > ra + rb) return false;
  }
  return true;
}

Box3D ego_footprint() {
  Box3D b;
  b.center = Vec3(-3.0, 0.0, 1.75);
  b.size = Vec3(13.0, 3.2, 3.5);
  b.id = -1;
  return b;
}

struct Face {
  Vec3 center;  // box frame
  Vec3 normal;  // box frame, outward
  Vec3 u_axis;  // in-plane horizontal axis (unit)
  double half_u = 0.0;
  double z_lo = 0.0;  // box frame
  double z_hi = 0.0;
};

std::vector<Face> vertical_faces(const Box3D& box, const SurfaceModel& surface) {
  const Vec3 half = 0.5 * box.size;
  const double ix = std::min(surface.inset, 0.25 * box.size.x());
  const double iy = std::min(surface.inset, 0.25 * box.size.y());
  const double iz = std::min(surface.inset, 0.25 * box.size.z());
  const double bottom_world = box.center.z() - half.z();
  const double z_lo = std::max(bottom_world, surface.min_z) - box.center.z();
  const double z_hi = half.z() - iz;
  if (z_hi <= z_lo) return {};
  const double fx = half.x() - ix;
  const double fy = half.y() - iy;
  return {
      {Vec3(fx, 0, 0), Vec3::UnitX(), Vec3::UnitY(), fy, z_lo, z_hi},
      {Vec3(-fx, 0, 0), -Vec3::UnitX(), Vec3::UnitY(), fy, z_lo, z_hi},
      {Vec3(0, fy, 0), Vec3::UnitY(), Vec3::UnitX(), fx, z_lo, z_hi},
      {Vec3(0, -fy, 0), -Vec3::UnitY(), Vec3::UnitX(), fx, z_lo, z_hi},
  };
}

/// Samples the faces of `box` visible from `viewer` (world frame). Returns
/// world-frame surface points.
std::vector<Vec3> sample_visible_surface(const Box3D& box,
                                         const SurfaceModel& surface,
                                         double density, const Vec3& viewer,
                                         Rng& rng) {
  std::vector<Vec3> out;
  const RigidTransform pose = box.pose();
  for (const Face& f : vertical_faces(box, surface)) {
    const Vec3 c_world = pose.apply(f.center);
    const Vec3 n_world = pose.rotation() * f.normal;
    // Draw the count even for hidden faces so visibility does not shift the
    // random stream of the remaining faces.
    const double area = 2.0 * f.half_u * (f.z_hi - f.z_lo);
    const std::size_t n = stochastic_round(rng, area * density);
    const bool visible = n_world.dot(viewer - c_world) > 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform(rng, -f.half_u, f.half_u);
      const double z = uniform(rng, f.z_lo, f.z_hi);
      if (visible) out.push_back(pose.apply(f.center + u * f.u_axis + z * Vec3::UnitZ()));
    }
  }
  return out;
}

}  // namespace

std::string_view label_name(PointLabel l) {
  switch (l) {
    case PointLabel::kTrueReturn: return "true_return";
    case PointLabel::kGhost: return "ghost";
    case PointLabel::kClutter: return "clutter";
  }
  return "unknown";
}

PointLabel parse_label(std::string_view s) {
  s = trim(s);
  if (s == "true_return") return PointLabel::kTrueReturn;
  if (s == "ghost") return PointLabel::kGhost;
  if (s == "clutter") return PointLabel::kClutter;
  fail(ErrorCode::kFormat, "unknown point label '" + std::string(s) + "'");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

std::string sensor_frame_name(int sensor_id) {
  return "sensor_" + std::to_string(sensor_id);
}

std::vector<SensorConfig> truck_layout(double rear_fov_effective_deg) {
  struct Mount {
    Vec3 position;
    double yaw_deg;
    bool rear;
  };
  const std::array<Mount, 6> mounts = {{
      {{2.5, 1.2, 1.0}, 30.0, false},
      {{2.5, -1.2, 1.0}, -30.0, false},
      {{-3.0, 1.3, 1.0}, 90.0, false},
      {{-3.0, -1.3, 1.0}, -90.0, false},
      {{-8.5, 1.2, 1.0}, 150.0, true},
      {{-8.5, -1.2, 1.0}, -150.0, true},
  }};
  std::vector<SensorConfig> out;
  for (std::size_t i = 0; i < mounts.size(); ++i) {
    SensorConfig s;
    s.sensor_id = static_cast<int>(i);
    s.extrinsic = RigidTransform::from_yaw(mounts[i].yaw_deg * kDeg, mounts[i].position);
    s.fov_deg = 120.0;
    s.fov_effective_deg = mounts[i].rear ? rear_fov_effective_deg : 120.0;
    s.max_range = 100.0;
    out.push_back(s);
  }
  return out;
}

Vec3 default_box_size(Category c) {
  switch (c) {
    case Category::kCar: return {4.5, 1.9, 1.6};
    case Category::kTruck: return {8.0, 2.5, 3.2};
    case Category::kOtherVehicle: return {6.0, 2.3, 2.5};
    case Category::kTrailer: return {10.0, 2.5, 3.5};
    case Category::kTrafficSign: return {0.4, 0.9, 2.4};
    case Category::kTrafficCone: return {0.5, 0.5, 0.9};
    case Category::kPedestrian: return {0.7, 0.7, 1.8};
  }
  return {1.0, 1.0, 1.0};
}

double default_base_rcs(Category c) {
  switch (c) {
    case Category::kCar: return 10.0;
    case Category::kTruck: return 20.0;
    case Category::kOtherVehicle: return 15.0;
    case Category::kTrailer: return 18.0;
    case Category::kTrafficSign: return 5.0;
    case Category::kTrafficCone: return -5.0;
    case Category::kPedestrian: return -8.0;
  }
  return 0.0;
}

std::size_t Scene::timestamp_index(double t) const {
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (std::abs(timestamps[i] - t) < 1e-9) return i;
  }
  fail(ErrorCode::kInvalidArgument, "time " + timestamp_key(t) +
                                        " is not a scene timestamp");
}

const SensorConfig& Scene::sensor(int sensor_id) const {
  for (const SensorConfig& s : sensors) {
    if (s.sensor_id == sensor_id) return s;
  }
  fail(ErrorCode::kInvalidArgument,
       "unknown sensor id " + std::to_string(sensor_id));
}

RigidTransform Scene::ego_pose_at(double t) const {
  Vec2 pos = ego_origin.head<2>();
  double heading = ego_heading;
  for (std::size_t i = 0; i < ego_segments.size(); ++i) {
    const EgoSegment& s = ego_segments[i];
    if (t <= s.t_start) break;
    const double end = i + 1 < ego_segments.size() ? ego_segments[i + 1].t_start : t;
    const double dt = std::min(t, end) - s.t_start;
    pos += s.velocity * dt;
    heading += s.yaw_rate * dt;
  }
  return RigidTransform::from_yaw(heading, Vec3(pos.x(), pos.y(), ego_origin.z()));
}

Vec2 Scene::ego_velocity_at(double t) const {
  Vec2 v = Vec2::Zero();
  for (const EgoSegment& s : ego_segments) {
    if (s.t_start <= t) v = s.velocity;
  }
  return v;
}

double Scene::ego_yaw_rate_at(double t) const {
  double w = 0.0;
  for (const EgoSegment& s : ego_segments) {
    if (s.t_start <= t) w = s.yaw_rate;
  }
  return w;
}

Vec3 Scene::ego_point_velocity(double t, const Vec3& offset) const {
  const Vec2 v = ego_velocity_at(t);
  const Vec3 r = ego_pose_at(t).rotation() * offset;
  const Vec3 omega(0.0, 0.0, ego_yaw_rate_at(t));
  return Vec3(v.x(), v.y(), 0.0) + omega.cross(r);
}

Box3D Scene::object_state_at(const ObjectTrack& obj, double t) const {
  Box3D b = obj.states.front();
  const double t0 = timestamps.front();
  b.center += Vec3(b.velocity.x(), b.velocity.y(), 0.0) * (t - t0);
  return b;
}

std::vector<Box3D> Scene::boxes_in_reference(std::size_t idx) const {
  const RigidTransform world_to_ref = invert(ego_poses.at(idx));
  std::vector<Box3D> out;
  out.reserve(objects.size());
  for (const ObjectTrack& o : objects) out.push_back(transform_box(world_to_ref, o.states.at(idx)));
  return out;
}

Scene generate_scene(const SceneConfig& config, std::uint64_t seed) {
  if (!(config.frame_rate > 0.0)) fail(ErrorCode::kInvalidArgument, "frame_rate must be > 0");
  if (config.num_keyframes == 0) fail(ErrorCode::kInvalidArgument, "need at least one keyframe");

  Scene scene;
  scene.sensors = config.sensors.empty() ? truck_layout() : config.sensors;
  if (scene.sensors.empty()) fail(ErrorCode::kInvalidArgument, "need at least one sensor");
  for (const SensorConfig& s : scene.sensors) s.check();
  scene.frame_rate = config.frame_rate;
  scene.surface = config.surface;
  scene.lidar = config.lidar;

  const std::size_t n_sweeps = config.history_sweeps + config.num_keyframes;
  for (std::size_t i = 0; i < n_sweeps; ++i) {
    // Canonicalize through the key so that timestamps round-trip exactly.
    scene.timestamps.push_back(parse_double(timestamp_key(static_cast<double>(i) / config.frame_rate)));
  }
  for (std::size_t k = 0; k < config.num_keyframes; ++k) {
    scene.keyframes.push_back(config.history_sweeps + k);
  }
  scene.duration = scene.timestamps.back() - scene.timestamps.front();

  Rng ego_rng(derive_seed(seed, 1));
  const double t_end = scene.timestamps.back();
  double heading = 0.0;
  for (double ts = 0.0; ts <= t_end + 1e-12 || scene.ego_segments.empty();
       ts += config.segment_duration) {
    const double speed = std::max(0.0, config.ego_speed + uniform(ego_rng, -1.0, 1.0) * config.ego_speed_jitter);
    EgoSegment seg;
    seg.t_start = ts;
    seg.velocity = speed * Vec2(std::cos(heading), std::sin(heading));
    seg.yaw_rate = config.ego_yaw_rate;
    heading += seg.yaw_rate * config.segment_duration;
    scene.ego_segments.push_back(seg);
    if (config.segment_duration <= 0.0) break;
  }
  for (double t : scene.timestamps) scene.ego_poses.push_back(scene.ego_pose_at(t));

  std::vector<Category> cats = config.categories;
  if (cats.empty()) cats.assign(kAllCategories.begin(), kAllCategories.end());

  Rng obj_rng(derive_seed(seed, 2));
  std::vector<Box3D> placed;
  for (std::size_t i = 0; i < config.num_objects; ++i) {
    const Category cat = cats[i % cats.size()];
    Box3D box;
    bool ok = false;
    int colliding = -1;
    for (int attempt = 0; attempt < config.max_placement_retries && !ok; ++attempt) {
      const double r = uniform(obj_rng, config.spawn_radius_min, config.spawn_radius_max);
      const double bearing = uniform(obj_rng, -std::numbers::pi, std::numbers::pi);
      box.size = default_box_size(cat);
      box.center = Vec3(r * std::cos(bearing), r * std::sin(bearing), 0.5 * box.size.z());
      box.yaw = normalize_yaw(uniform(obj_rng, -std::numbers::pi, std::numbers::pi));
      box.category = cat;
      box.id = static_cast<int>(i);
      const bool is_static = cat == Category::kTrafficSign || cat == Category::kTrafficCone;
      const double speed = is_static ? 0.0 : uniform(obj_rng, 0.0, config.object_speed_max);
      box.velocity = speed * Vec2(std::cos(box.yaw), std::sin(box.yaw));
      ok = true;
      if (bev_overlap(box, ego_footprint(), kPlacementMargin)) {
        ok = false;
        colliding = -1;
      }
      for (const Box3D& other : placed) {
        if (ok && bev_overlap(box, other, kPlacementMargin)) {
          ok = false;
          colliding = other.id;
        }
      }
    }
    if (!ok) {
      fail(ErrorCode::kInfeasible,
           "cannot place object " + std::to_string(i) + " (" +
               std::string(category_name(cat)) + "): still colliding with " +
               (colliding < 0 ? std::string("ego vehicle")
                              : "object " + std::to_string(colliding)) +
               " after " + std::to_string(config.max_placement_retries) + " retries");
    }
    placed.push_back(box);

    ObjectTrack track;
    track.id = box.id;
    track.category = cat;
    track.surface_density = config.radar_density;
    track.base_rcs = default_base_rcs(cat);
    track.states.push_back(box);
    scene.objects.push_back(std::move(track));
  }
  for (ObjectTrack& o : scene.objects) {
    for (std::size_t i = 1; i < scene.timestamps.size(); ++i) {
      o.states.push_back(scene.object_state_at(o, scene.timestamps[i]));
    }
  }
  return scene;
}

LabeledSweep simulate_sweep(const Scene& scene, int sensor_id, double t,
                            double noise_sigma_xyz, std::uint64_t seed) {
  const SensorConfig& sensor = scene.sensor(sensor_id);
  const std::size_t idx = scene.timestamp_index(t);
  const double ts = scene.timestamps[idx];
  const RigidTransform sensor_to_world = compose(scene.ego_poses[idx], sensor.extrinsic);
  const RigidTransform world_to_sensor = invert(sensor_to_world);
  const Vec3 s_pos = sensor_to_world.translation();
  const Vec3 s_vel = scene.ego_point_velocity(ts, sensor.extrinsic.translation());

  LabeledSweep out;
  out.points.frame_id = sensor_frame_name(sensor_id);
  for (const ObjectTrack& obj : scene.objects) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(sensor_id) + 1, idx,
                        static_cast<std::uint64_t>(obj.id) + 1));
    const Box3D& box = obj.states[idx];
    const Vec3 obj_vel(box.velocity.x(), box.velocity.y(), 0.0);
    for (const Vec3& p : sample_visible_surface(box, scene.surface, obj.surface_density, s_pos, rng)) {
      const Vec3 los = (p - s_pos).normalized();
      const double doppler = los.dot(obj_vel - s_vel) + gaussian(rng, noise_sigma_xyz);
      const Vec3 noisy = p + Vec3(gaussian(rng, noise_sigma_xyz), gaussian(rng, noise_sigma_xyz),
                                  gaussian(rng, noise_sigma_xyz));
      const double rcs = obj.base_rcs + gaussian(rng, kRcsJitterDb);
      const Vec3 local = world_to_sensor.apply(noisy);
      if (!within_fov(local, sensor.fov_effective_deg) || local.norm() > sensor.max_range) continue;
      RadarPoint rp;
      rp.set_position(local);
      rp.rcs = rcs;
      rp.doppler = doppler;
      rp.sensor_id = sensor_id;
      rp.t = ts;
      out.push(rp, PointLabel::kTrueReturn, obj.id);
    }
  }
  return out;
}

LabeledSweep simulate_lidar(const Scene& scene, double t, double noise_sigma_xyz,
                            std::uint64_t seed) {
  const std::size_t idx = scene.timestamp_index(t);
  const double ts = scene.timestamps[idx];
  const RigidTransform& ego = scene.ego_poses[idx];
  const RigidTransform world_to_ref = invert(ego);
  const Vec3 l_pos = compose(ego, scene.lidar.extrinsic).translation();
  const double range = scene.lidar.max_range;

  LabeledSweep out;
  out.points.frame_id = std::string(kReferenceFrame);
  auto emit = [&](const Vec3& world, int object_id, Rng& rng) {
    const Vec3 noisy = world + Vec3(gaussian(rng, noise_sigma_xyz), gaussian(rng, noise_sigma_xyz),
                                    gaussian(rng, noise_sigma_xyz));
    if ((noisy - l_pos).norm() > range) return;
    RadarPoint rp;
    rp.set_position(world_to_ref.apply(noisy));
    rp.sensor_id = kLidarSensorId;
    rp.t = ts;
    out.push(rp, PointLabel::kTrueReturn, object_id);
  };

  for (const ObjectTrack& obj : scene.objects) {
    Rng rng(derive_seed(seed, 0xA11DA2, idx, static_cast<std::uint64_t>(obj.id) + 1));
    const double density = obj.surface_density * scene.lidar.density_multiplier;
    for (const Vec3& p : sample_visible_surface(obj.states[idx], scene.surface, density, l_pos, rng)) {
      emit(p, obj.id, rng);
    }
  }
  Rng ground_rng(derive_seed(seed, 0x6A0D, idx));
  const std::size_t n_ground = stochastic_round(
      ground_rng, std::numbers::pi * range * range * scene.lidar.ground_density);
  for (std::size_t i = 0; i < n_ground; ++i) {
    const double r = range * std::sqrt(uniform(ground_rng, 0.0, 1.0));
    const double a = uniform(ground_rng, -std::numbers::pi, std::numbers::pi);
    emit(Vec3(l_pos.x() + r * std::cos(a), l_pos.y() + r * std::sin(a), 0.0), -1, ground_rng);
  }
  return out;
}

LabeledSweep inject_artifacts(const LabeledSweep& sweep, const SensorConfig& sensor,
                              std::size_t ghost_count, std::size_t clutter_count,
                              const std::vector<ReflectorPlane>& planes,
                              std::uint64_t seed) {
  LabeledSweep out = sweep;
  if (ghost_count == 0 && clutter_count == 0) return out;

  std::vector<std::size_t> true_idx;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (sweep.labels[i] == PointLabel::kTrueReturn) true_idx.push_back(i);
  }
  auto in_frustum = [&](const Vec3& p) {
    return within_fov(p, sensor.fov_effective_deg) && p.norm() <= sensor.max_range;
  };

  Rng rng(derive_seed(seed, 0x6057));
  if (ghost_count > 0) {
    if (true_idx.empty() || planes.empty()) {
      fail(ErrorCode::kInvalidArgument, "ghost injection needs true returns and reflector planes");
    }
    for (std::size_t g = 0; g < ghost_count; ++g) {
      bool placed = false;
      for (int attempt = 0; attempt < kArtifactRetries && !placed; ++attempt) {
        const std::size_t src = true_idx[std::uniform_int_distribution<std::size_t>(0, true_idx.size() - 1)(rng)];
        const ReflectorPlane& plane = planes[std::uniform_int_distribution<std::size_t>(0, planes.size() - 1)(rng)];
        RadarPoint gp = sweep.points.points[src];
        const Vec3 mirrored = plane.mirror(gp.position());
        if (!in_frustum(mirrored)) continue;
        gp.set_position(mirrored);
        gp.rcs -= kGhostRcsDropDb;
        out.push(gp, PointLabel::kGhost, -1);
        placed = true;
      }
      if (!placed) {
        fail(ErrorCode::kInfeasible, "ghost " + std::to_string(g) +
                                         ": no mirrored return falls inside the sensor frustum");
      }
    }
  }

  const double half_fov = 0.5 * sensor.fov_effective_deg * kDeg;
  const double t_sweep = sweep.points.empty() ? 0.0 : sweep.points.points.front().t;
  for (std::size_t c = 0; c < clutter_count; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kArtifactRetries && !placed; ++attempt) {
      const double az = uniform(rng, -half_fov, half_fov);
      const double r = sensor.max_range * std::sqrt(uniform(rng, 0.0, 1.0));
      const Vec3 p(r * std::cos(az), r * std::sin(az), uniform(rng, kClutterZLow, kClutterZHigh));
      if (!in_frustum(p)) continue;
      bool clear = true;
      for (std::size_t i : true_idx) {
        if ((sweep.points.points[i].position() - p).norm() < kClutterExclusionRadius) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      RadarPoint cp;
      cp.set_position(p);
      cp.rcs = uniform(rng, -15.0, 5.0);
      cp.doppler = uniform(rng, -10.0, 10.0);
      cp.sensor_id = sensor.sensor_id;
      cp.t = t_sweep;
      out.push(cp, PointLabel::kClutter, -1);
      placed = true;
    }
    if (!placed) {
      fail(ErrorCode::kInfeasible, "clutter point " + std::to_string(c) + ": no free position after " +
                                       std::to_string(kArtifactRetries) + " retries");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scene file

namespace {

ordered_json box_state_json(const Box3D& b, double t) {
  ordered_json j;
  j["t"] = t;
  j["center"] = {b.center.x(), b.center.y(), b.center.z()};
  j["size"] = {b.size.x(), b.size.y(), b.size.z()};
  j["yaw"] = b.yaw;
  j["velocity"] = {b.velocity.x(), b.velocity.y()};
  return j;
}

Vec3 vec3_of(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

RigidTransform transform_of(const nlohmann::json& j) {
  std::array<double, 16> m{};
  if (j.size() != 16) fail(ErrorCode::kFormat, "extrinsic/pose must have 16 entries");
  for (std::size_t i = 0; i < 16; ++i) m[i] = j.at(i).get<double>();
  return RigidTransform::from_row_major(m);
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
  ordered_json j;
  j["frame_rate"] = scene.frame_rate;
  j["duration"] = scene.duration;
  j["world_frame"] = kWorldFrame;
  j["reference_frame"] = kReferenceFrame;
  ordered_json sensors = ordered_json::array();
  for (const SensorConfig& s : scene.sensors) {
    ordered_json js;
    js["sensor_id"] = s.sensor_id;
    js["extrinsic"] = s.extrinsic.to_row_major();
    js["fov_deg"] = s.fov_deg;
    js["fov_effective_deg"] = s.fov_effective_deg;
    js["max_range"] = s.max_range;
    sensors.push_back(js);
  }
  j["sensors"] = sensors;
  ordered_json poses = ordered_json::object();
  for (std::size_t i = 0; i < scene.timestamps.size(); ++i) {
    poses[timestamp_key(scene.timestamps[i])] = scene.ego_poses[i].to_row_major();
  }
  j["ego_poses"] = poses;
  ordered_json kf = ordered_json::array();
  for (std::size_t k : scene.keyframes) kf.push_back(timestamp_key(scene.timestamps[k]));
  j["keyframes"] = kf;
  ordered_json motion;
  motion["origin"] = {scene.ego_origin.x(), scene.ego_origin.y(), scene.ego_origin.z()};
  motion["heading"] = scene.ego_heading;
  ordered_json segs = ordered_json::array();
  for (const EgoSegment& s : scene.ego_segments) {
    segs.push_back({{"t_start", s.t_start},
                    {"velocity", {s.velocity.x(), s.velocity.y()}},
                    {"yaw_rate", s.yaw_rate}});
  }
  motion["segments"] = segs;
  j["ego_motion"] = motion;
  j["surface"] = {{"inset", scene.surface.inset}, {"min_z", scene.surface.min_z}};
  j["lidar"] = {{"extrinsic", scene.lidar.extrinsic.to_row_major()},
                {"max_range", scene.lidar.max_range},
                {"density_multiplier", scene.lidar.density_multiplier},
                {"ground_density", scene.lidar.ground_density}};
  ordered_json objects = ordered_json::array();
  for (const ObjectTrack& o : scene.objects) {
    ordered_json jo;
    jo["id"] = o.id;
    jo["category"] = category_name(o.category);
    jo["surface_density"] = o.surface_density;
    jo["base_rcs"] = o.base_rcs;
    ordered_json states = ordered_json::array();
    for (std::size_t i = 0; i < o.states.size(); ++i) {
      states.push_back(box_state_json(o.states[i], scene.timestamps[i]));
    }
    jo["states"] = states;
    objects.push_back(jo);
  }
  j["objects"] = objects;
  return j.dump(1) + "\n";
}

Scene scene_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("scene file: ") + e.what());
  }
  try {
    Scene scene;
    scene.frame_rate = j.at("frame_rate").get<double>();
    scene.duration = j.at("duration").get<double>();
    for (const auto& js : j.at("sensors")) {
      SensorConfig s;
      s.sensor_id = js.at("sensor_id").get<int>();
      s.extrinsic = transform_of(js.at("extrinsic"));
      s.fov_deg = js.at("fov_deg").get<double>();
      s.fov_effective_deg = js.at("fov_effective_deg").get<double>();
      s.max_range = js.at("max_range").get<double>();
      s.check();
      scene.sensors.push_back(s);
    }
    std::vector<std::pair<double, RigidTransform>> poses;
    for (const auto& [key, value] : j.at("ego_poses").items()) {
      poses.emplace_back(parse_double(key), transform_of(value));
    }
    std::sort(poses.begin(), poses.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [t, pose] : poses) {
      scene.timestamps.push_back(t);
      scene.ego_poses.push_back(pose);
    }
    for (const auto& k : j.at("keyframes")) {
      scene.keyframes.push_back(scene.timestamp_index(parse_double(k.get<std::string>())));
    }
    const auto& motion = j.at("ego_motion");
    scene.ego_origin = vec3_of(motion.at("origin"));
    scene.ego_heading = motion.at("heading").get<double>();
    for (const auto& s : motion.at("segments")) {
      EgoSegment seg;
      seg.t_start = s.at("t_start").get<double>();
      seg.velocity = Vec2(s.at("velocity").at(0).get<double>(), s.at("velocity").at(1).get<double>());
      seg.yaw_rate = s.at("yaw_rate").get<double>();
      scene.ego_segments.push_back(seg);
    }
    scene.surface.inset = j.at("surface").at("inset").get<double>();
    scene.surface.min_z = j.at("surface").at("min_z").get<double>();
    const auto& jl = j.at("lidar");
    scene.lidar.extrinsic = transform_of(jl.at("extrinsic"));
    scene.lidar.max_range = jl.at("max_range").get<double>();
    scene.lidar.density_multiplier = jl.at("density_multiplier").get<double>();
    scene.lidar.ground_density = jl.at("ground_density").get<double>();
    for (const auto& jo : j.at("objects")) {
      ObjectTrack o;
      o.id = jo.at("id").get<int>();
      const auto cat = parse_category(jo.at("category").get<std::string>());
      if (!cat) fail(ErrorCode::kFormat, "object " + std::to_string(o.id) + ": unknown category");
      o.category = *cat;
      o.surface_density = jo.at("surface_density").get<double>();
      o.base_rcs = jo.at("base_rcs").get<double>();
      for (const auto& st : jo.at("states")) {
        Box3D b;
        b.center = vec3_of(st.at("center"));
        b.size = vec3_of(st.at("size"));
        b.yaw = st.at("yaw").get<double>();
        b.velocity = Vec2(st.at("velocity").at(0).get<double>(), st.at("velocity").at(1).get<double>());
        b.category = o.category;
        b.id = o.id;
        b.check();
        o.states.push_back(b);
      }
      if (o.states.size() != scene.timestamps.size()) {
        fail(ErrorCode::kFormat, "object " + std::to_string(o.id) + ": expected one state per timestamp");
      }
      scene.objects.push_back(std::move(o));
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("scene file: ") + e.what());
  }
}

void write_scene(const Scene& scene, const std::filesystem::path& path) {
  write_text_file(path, scene_to_json(scene));
}

Scene read_scene(const std::filesystem::path& path) {
  return scene_from_json(read_text_file(path));
}

void write_labels_csv(const LabeledSweep& sweep, const std::filesystem::path& path) {
  std::string out = "index,label,object_id\n";
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += label_name(sweep.labels[i]);
    out += ',';
    out += std::to_string(sweep.object_ids[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

void read_labels_csv(const std::filesystem::path& path, LabeledSweep& sweep) {
  const std::string text = read_text_file(path);
  sweep.labels.clear();
  sweep.object_ids.clear();
  bool header = false;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    if (!header) {
      if (line != "index,label,object_id") fail(ErrorCode::kFormat, path.string() + ": bad labels header");
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 3) fail(ErrorCode::kFormat, path.string() + ": expected 3 fields");
    if (static_cast<std::size_t>(parse_int(f[0])) != sweep.labels.size()) {
      fail(ErrorCode::kFormat, path.string() + ": label indices must be consecutive");
    }
    sweep.labels.push_back(parse_label(f[1]));
    sweep.object_ids.push_back(static_cast<int>(parse_int(f[2])));
  }
  if (sweep.labels.size() != sweep.points.size()) {
    fail(ErrorCode::kFormat, path.string() + ": label count does not match point count");
  }
}

}  // namespace hyperdet::synth
