#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace borderforge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
  friend Point2 operator*(double s, Point2 a) { return {a.x * s, a.y * s}; }
  friend Point2 operator/(Point2 a, double s) { return {a.x / s, a.y / s}; }
  friend bool operator==(Point2 a, Point2 b) = default;

  [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(y); }
  [[nodiscard]] double norm() const { return std::hypot(x, y); }
};

[[nodiscard]] inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
[[nodiscard]] inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

/// Wraps an angle into (-pi, pi].
[[nodiscard]] double normalize_angle(double theta);

struct Pose2 {
  Point2 position;
  double theta = 0.0;

  Pose2() = default;
  Pose2(Point2 p, double heading) : position(p), theta(normalize_angle(heading)) {}

  /// Maps a point from this pose's local frame into the parent frame.
  [[nodiscard]] Point2 transform(Point2 local) const;
  /// Maps a parent-frame point into this pose's local frame.
  [[nodiscard]] Point2 inverse_transform(Point2 world) const;

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// Element of SE(3): x_parent = rotation * x_child + translation.
class RigidTransform3 {
 public:
  RigidTransform3();
  /// Throws GeometryError unless rotation is orthonormal with det +1 (tol 1e-9).
  RigidTransform3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  [[nodiscard]] const Eigen::Matrix3d& rotation() const { return rotation_; }
  [[nodiscard]] const Eigen::Vector3d& translation() const { return translation_; }

  [[nodiscard]] Eigen::Vector3d apply(const Eigen::Vector3d& p) const;
  [[nodiscard]] Eigen::Vector3d apply_inverse(const Eigen::Vector3d& p) const;
  [[nodiscard]] RigidTransform3 compose(const RigidTransform3& child) const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// Ordered chain of at least two finite points with distinct neighbours.
class Polyline {
 public:
  explicit Polyline(std::vector<Point2> vertices);

  [[nodiscard]] const std::vector<Point2>& vertices() const { return vertices_; }
  [[nodiscard]] std::size_t size() const { return vertices_.size(); }
  [[nodiscard]] const Point2& front() const { return vertices_.front(); }
  [[nodiscard]] const Point2& back() const { return vertices_.back(); }
  [[nodiscard]] const Point2& operator[](std::size_t i) const { return vertices_[i]; }

  /// Point at arc length s from the first vertex, clamped to the chain.
  [[nodiscard]] Point2 point_at(double s) const;

  friend bool operator==(const Polyline&, const Polyline&) = default;

 private:
  std::vector<Point2> vertices_;
};

[[nodiscard]] double distance(Point2 a, Point2 b);

/// Length of the diagonal of the axis-aligned bounding box. Throws on empty input.
[[nodiscard]] double aabb_diagonal(std::span<const Point2> points);

/// Even-odd containment; points on the boundary count as inside.
/// A closing edge back to the first vertex is implied. Throws on zero-area polygons.
[[nodiscard]] bool point_in_polygon(Point2 p, const Polyline& polygon);

[[nodiscard]] double polyline_length(const Polyline& poly);

/// Signed shoelace area; positive for counterclockwise order. Closure implied.
[[nodiscard]] double signed_area(std::span<const Point2> ring);

[[nodiscard]] Point2 centroid(std::span<const Point2> points);

[[nodiscard]] double point_segment_distance(Point2 p, Point2 a, Point2 b);

/// Parameter along p0->p1 where it crosses q0-q1, under the same rules as segment_blocks.
[[nodiscard]] std::optional<double> segment_crossing(Point2 p0, Point2 p1, Point2 q0, Point2 q1);
/// True when segment p0-p1 crosses segment q0-q1. Touching at p1 (the segment
/// end) does not count, so a target lying exactly on a wall line stays visible.
[[nodiscard]] bool segment_blocks(Point2 p0, Point2 p1, Point2 q0, Point2 q1);

}  // namespace borderforge
