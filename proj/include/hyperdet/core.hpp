#pragma once

// Domain types shared by every stage: radar points, clouds, rigid transforms
// and yaw-only oriented boxes.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hyperdet {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Reserved sensor ids for points that were not measured by a radar.
inline constexpr int kPseudoForegroundSensor = -1;
inline constexpr int kLiftedSensor = -2;

struct RadarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double rcs = 0.0;      // dBsm
  double doppler = 0.0;  // m/s, positive = receding
  int sensor_id = 0;
  double t = 0.0;  // sweep timestamp, seconds

  Vec3 position() const { return {x, y, z}; }
  void set_position(const Vec3& p) {
    x = p.x();
    y = p.y();
    z = p.z();
  }

  friend bool operator==(const RadarPoint&, const RadarPoint&) = default;
};

struct PointCloud {
  std::vector<RadarPoint> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

/// Rotation plus translation. Kept as two parts so that orthonormality of
/// the rotation can be checked directly.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) {
    return {Mat3::Identity(), t};
  }
  static RigidTransform from_yaw(double yaw, const Vec3& t = Vec3::Zero());
  /// Row-major 4x4 homogeneous matrix, last row must be (0,0,0,1).
  static RigidTransform from_row_major(const std::array<double, 16>& m);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Mat4 matrix() const;
  std::array<double, 16> to_row_major() const;

  /// Largest entry of |R^T R - I|.
  double orthonormality_error() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// a * b: apply b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

/// Maps every point position; attributes are carried over untouched.
/// Throws kInvalidArgument naming the first non-finite point.
PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud,
                           std::string_view target_frame);

enum class Category : std::uint8_t {
  kCar = 0,
  kTruck,
  kOtherVehicle,
  kTrailer,
  kTrafficSign,
  kTrafficCone,
  kPedestrian,
};

inline constexpr std::array<Category, 7> kAllCategories = {
    Category::kCar,         Category::kTruck,       Category::kOtherVehicle,
    Category::kTrailer,     Category::kTrafficSign, Category::kTrafficCone,
    Category::kPedestrian};

std::string_view category_name(Category c);
std::optional<Category> parse_category(std::string_view name);

/// Wraps an angle into (-pi, pi].
double normalize_yaw(double yaw);

struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();  // length (x), width (y), height (z)
  double yaw = 0.0;
  Category category = Category::kCar;
  Vec2 velocity = Vec2::Zero();
  int id = 0;

  /// Throws kInvalidArgument on non-positive size or non-finite fields.
  void check() const;
  /// Box-frame pose: box frame -> parent frame.
  RigidTransform pose() const { return RigidTransform::from_yaw(yaw, center); }
};

/// Boundary counts as inside.
bool point_in_box(const Vec3& p, const Box3D& box);

/// Moves a box by a rigid transform. Only the yaw part of the rotation is
/// kept, matching the yaw-only box model.
Box3D transform_box(const RigidTransform& t, const Box3D& box);

struct SensorConfig {
  int sensor_id = 0;
  RigidTransform extrinsic;  // sensor -> reference
  double fov_deg = 360.0;
  double fov_effective_deg = 360.0;
  double max_range = 100.0;

  void check() const;
};

/// Azimuth of a sensor-frame position, radians in (-pi, pi].
inline double azimuth(const Vec3& p) { return std::atan2(p.y(), p.x()); }

/// True when the sensor-frame azimuth is within +-fov/2 (inclusive).
bool within_fov(const Vec3& sensor_frame_point, double fov_deg);

}  // namespace hyperdet
