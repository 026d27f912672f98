#pragma once

// Deterministic synthetic multi-radar world. Every generated point carries a
// label (true return / ghost / clutter) so downstream stages can be checked
// against ground truth.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyperdet/core.hpp"

namespace hyperdet::synth {

inline constexpr std::string_view kWorldFrame = "world";
inline constexpr std::string_view kReferenceFrame = "reference";

enum class PointLabel : std::uint8_t { kTrueReturn = 0, kGhost, kClutter };

std::string_view label_name(PointLabel l);
PointLabel parse_label(std::string_view s);

struct EgoSegment {
  double t_start = 0.0;
  Vec2 velocity = Vec2::Zero();  // world frame, m/s
  double yaw_rate = 0.0;         // rad/s
};

/// One object and its world-frame box state at every scene timestamp.
struct ObjectTrack {
  int id = 0;
  Category category = Category::kCar;
  double surface_density = 0.5;  // radar points per m^2 per sweep
  double base_rcs = 10.0;        // dBsm
  std::vector<Box3D> states;
};

struct SurfaceModel {
  /// Reflecting faces sit this far inside the annotated box.
  double inset = 0.15;
  /// Faces are only sampled above this height (wheel gap / underbody).
  double min_z = 0.3;
};

struct LidarModel {
  RigidTransform extrinsic = RigidTransform::from_translation({0.0, 0.0, 2.0});
  double max_range = 50.0;
  double density_multiplier = 20.0;  // relative to the object radar density
  double ground_density = 0.5;       // ground returns per m^2
};

struct Scene {
  std::vector<SensorConfig> sensors;
  double frame_rate = 20.0;
  double duration = 0.0;
  std::vector<double> timestamps;
  std::vector<RigidTransform> ego_poses;  // reference -> world, per timestamp
  std::vector<std::size_t> keyframes;     // indices into timestamps
  Vec3 ego_origin = Vec3::Zero();
  double ego_heading = 0.0;
  std::vector<EgoSegment> ego_segments;
  std::vector<ObjectTrack> objects;
  SurfaceModel surface;
  LidarModel lidar;

  /// Index of a scene timestamp; throws kInvalidArgument when t is not one.
  std::size_t timestamp_index(double t) const;
  const SensorConfig& sensor(int sensor_id) const;

  /// Continuous-time ego pose from the piecewise-constant-velocity model.
  RigidTransform ego_pose_at(double t) const;
  Vec2 ego_velocity_at(double t) const;
  double ego_yaw_rate_at(double t) const;
  /// World-frame velocity of a point rigidly attached to the ego at
  /// reference-frame offset `offset`, at time t.
  Vec3 ego_point_velocity(double t, const Vec3& offset) const;

  /// Continuous-time object state (constant velocity, fixed yaw).
  Box3D object_state_at(const ObjectTrack& obj, double t) const;

  /// Boxes at a timestamp expressed in the reference frame.
  std::vector<Box3D> boxes_in_reference(std::size_t timestamp_index) const;
};

struct SceneConfig {
  std::vector<SensorConfig> sensors;  // empty -> truck_layout()
  double frame_rate = 20.0;
  std::size_t num_keyframes = 5;
  std::size_t history_sweeps = 10;  // k past sweeps before the first keyframe
  double ego_speed = 5.0;
  double ego_speed_jitter = 1.0;
  double ego_yaw_rate = 0.05;
  double segment_duration = 0.5;
  std::size_t num_objects = 8;
  std::vector<Category> categories;  // empty -> all categories
  double spawn_radius_min = 10.0;
  double spawn_radius_max = 40.0;
  double object_speed_max = 8.0;
  double radar_density = 0.5;
  SurfaceModel surface;
  LidarModel lidar;
  int max_placement_retries = 200;
};

/// Six-radar surround layout: front pair, side pair and a rear pair whose
/// 120 deg field of view is trimmed to `rear_fov_effective_deg`.
std::vector<SensorConfig> truck_layout(double rear_fov_effective_deg = 100.0);

/// Default box dimensions (l, w, h) and base rcs per category.
Vec3 default_box_size(Category c);
double default_base_rcs(Category c);

/// Throws kInfeasible naming the colliding objects when placement fails.
Scene generate_scene(const SceneConfig& config, std::uint64_t seed);

struct LabeledSweep {
  PointCloud points;
  std::vector<PointLabel> labels;
  std::vector<int> object_ids;  // -1 when not a true object return

  std::size_t size() const { return points.size(); }
  void push(const RadarPoint& p, PointLabel label, int object_id) {
    points.points.push_back(p);
    labels.push_back(label);
    object_ids.push_back(object_id);
  }
};

/// Radar sweep in the sensor frame ("sensor_<id>").
LabeledSweep simulate_sweep(const Scene& scene, int sensor_id, double t,
                            double noise_sigma_xyz, std::uint64_t seed);

/// Dense LiDAR-like sweep with a flat ground plane at z = 0, in the
/// reference frame. Ground returns are true returns with object id -1.
LabeledSweep simulate_lidar(const Scene& scene, double t,
                            double noise_sigma_xyz, std::uint64_t seed);

/// Plane n . x = offset with unit normal n, in the sensor frame.
struct ReflectorPlane {
  Vec3 normal = Vec3::UnitX();
  double offset = 0.0;

  Vec3 mirror(const Vec3& p) const {
    return p - 2.0 * (normal.dot(p) - offset) * normal;
  }
};

inline constexpr double kClutterExclusionRadius = 2.0;

/// Appends ghosts (true returns mirrored across a reflector plane) and then
/// clutter (uniform in the sensor frustum, at least 2 m from every true
/// return). Original points keep their order and come first.
LabeledSweep inject_artifacts(const LabeledSweep& sweep,
                              const SensorConfig& sensor,
                              std::size_t ghost_count,
                              std::size_t clutter_count,
                              const std::vector<ReflectorPlane>& planes,
                              std::uint64_t seed);

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(std::string_view text);
void write_scene(const Scene& scene, const std::filesystem::path& path);
Scene read_scene(const std::filesystem::path& path);

/// `index,label,object_id` rows aligned with the sweep's points.
void write_labels_csv(const LabeledSweep& sweep, const std::filesystem::path& path);
void read_labels_csv(const std::filesystem::path& path, LabeledSweep& sweep);

/// Mixes a base seed with stream identifiers (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

std::string sensor_frame_name(int sensor_id);

}  // namespace hyperdet::synth
