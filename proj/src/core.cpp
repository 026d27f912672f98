#include "hyperdet/core.hpp"

#include <cmath>
#include <numbers>

#include "hyperdet/error.hpp"

namespace hyperdet {

namespace {

constexpr double kOrthonormalTol = 1e-9;

bool finite3(const Vec3& v) { return v.allFinite(); }

}  // namespace

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation_.allFinite() || !finite3(translation_)) {
    fail(ErrorCode::kInvalidArgument, "rigid transform has non-finite entries");
  }
  if (orthonormality_error() > kOrthonormalTol ||
      std::abs(rotation_.determinant() - 1.0) > kOrthonormalTol) {
    fail(ErrorCode::kInvalidArgument,
         "rotation is not orthonormal with determinant +1");
  }
}

RigidTransform RigidTransform::from_yaw(double yaw, const Vec3& t) {
  return {Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(), t};
}

RigidTransform RigidTransform::from_row_major(const std::array<double, 16>& m) {
  if (m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0) {
    fail(ErrorCode::kFormat, "homogeneous matrix last row must be 0 0 0 1");
  }
  Mat3 r;
  r << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
  return {r, Vec3(m[3], m[7], m[11])};
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

std::array<double, 16> RigidTransform::to_row_major() const {
  std::array<double, 16> out{};
  const Mat4 m = matrix();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out[r * 4 + c] = m(r, c);
  }
  return out;
}

double RigidTransform::orthonormality_error() const {
  return (rotation_.transpose() * rotation_ - Mat3::Identity())
      .cwiseAbs()
      .maxCoeff();
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation() * b.rotation(),
          a.rotation() * b.translation() + a.translation()};
}

RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = t.rotation().transpose();
  return {rt, -(rt * t.translation())};
}

PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud,
                           std::string_view target_frame) {
  PointCloud out;
  out.frame_id = std::string(target_frame);
  out.points.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    RadarPoint p = cloud.points[i];
    const Vec3 pos = p.position();
    if (!finite3(pos)) {
      fail(ErrorCode::kInvalidArgument,
           "non-finite coordinates at point index " + std::to_string(i));
    }
    p.set_position(t.apply(pos));
    out.points.push_back(p);
  }
  return out;
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kCar: return "car";
    case Category::kTruck: return "truck";
    case Category::kOtherVehicle: return "other_vehicle";
    case Category::kTrailer: return "trailer";
    case Category::kTrafficSign: return "traffic_sign";
    case Category::kTrafficCone: return "traffic_cone";
    case Category::kPedestrian: return "pedestrian";
  }
  return "unknown";
}

std::optional<Category> parse_category(std::string_view name) {
  for (Category c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

double normalize_yaw(double yaw) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double y = std::fmod(yaw, kTwoPi);
  if (y <= -std::numbers::pi) y += kTwoPi;
  if (y > std::numbers::pi) y -= kTwoPi;
  return y;
}

void Box3D::check() const {
  if (!center.allFinite() || !size.allFinite() || !std::isfinite(yaw) ||
      !velocity.allFinite()) {
    fail(ErrorCode::kInvalidArgument,
         "box " + std::to_string(id) + " has non-finite fields");
  }
  if ((size.array() <= 0.0).any()) {
    fail(ErrorCode::kInvalidArgument,
         "box " + std::to_string(id) + " has non-positive size");
  }
}

bool point_in_box(const Vec3& p, const Box3D& box) {
  const Vec3 d = p - box.center;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  // Rotate by -yaw about the center.
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  const Vec3 half = 0.5 * box.size;
  return std::abs(lx) <= half.x() && std::abs(ly) <= half.y() &&
         std::abs(d.z()) <= half.z();
}

Box3D transform_box(const RigidTransform& t, const Box3D& box) {
  Box3D out = box;
  out.center = t.apply(box.center);
  const Vec3 heading = t.rotation() * Vec3(std::cos(box.yaw), std::sin(box.yaw), 0.0);
  out.yaw = normalize_yaw(std::atan2(heading.y(), heading.x()));
  const Vec3 v = t.rotation() * Vec3(box.velocity.x(), box.velocity.y(), 0.0);
  out.velocity = v.head<2>();
  return out;
}

void SensorConfig::check() const {
  if (!(fov_deg > 0.0 && fov_deg <= 360.0)) {
    fail(ErrorCode::kInvalidArgument, "sensor " + std::to_string(sensor_id) +
                                          ": fov_deg must be in (0, 360]");
  }
  if (!(fov_effective_deg > 0.0 && fov_effective_deg <= fov_deg)) {
    fail(ErrorCode::kInvalidArgument,
         "sensor " + std::to_string(sensor_id) +
             ": fov_effective_deg must be in (0, fov_deg]");
  }
  if (!(max_range > 0.0)) {
    fail(ErrorCode::kInvalidArgument,
         "sensor " + std::to_string(sensor_id) + ": max_range must be > 0");
  }
}

bool within_fov(const Vec3& sensor_frame_point, double fov_deg) {
  const double az_deg = azimuth(sensor_frame_point) * 180.0 / std::numbers::pi;
  return std::abs(az_deg) <= 0.5 * fov_deg;
}

}  // namespace hyperdet
