#include "borderforge/geometry.hpp"

#include <algorithm>
#include <numbers>

namespace borderforge {

double normalize_angle(double theta) {
  if (!std::isfinite(theta)) throw GeometryError("non-finite angle");
  double wrapped = std::remainder(theta, 2.0 * std::numbers::pi);  // [-pi, pi]
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

Point2 Pose2::transform(Point2 local) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {position.x + c * local.x - s * local.y, position.y + s * local.x + c * local.y};
}

Point2 Pose2::inverse_transform(Point2 world) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Point2 d = world - position;
  return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

RigidTransform3::RigidTransform3()
    : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

RigidTransform3::RigidTransform3(const Eigen::Matrix3d& rotation,
                                 const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  constexpr double kTol = 1e-9;
  if (!rotation.allFinite() || !translation.allFinite())
    throw GeometryError("rigid transform has non-finite entries");
  if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >
      kTol)
    throw GeometryError("rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > kTol)
    throw GeometryError("rotation determinant is not +1");
}

Eigen::Vector3d RigidTransform3::apply(const Eigen::Vector3d& p) const {
  return rotation_ * p + translation_;
}

Eigen::Vector3d RigidTransform3::apply_inverse(const Eigen::Vector3d& p) const {
  return rotation_.transpose() * (p - translation_);
}

RigidTransform3 RigidTransform3::compose(const RigidTransform3& child) const {
  RigidTransform3 out;
  out.rotation_ = rotation_ * child.rotation_;
  out.translation_ = rotation_ * child.translation_ + translation_;
  return out;
}

Polyline::Polyline(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) throw GeometryError("polyline needs at least 2 vertices");
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!vertices_[i].finite())
      throw GeometryError("polyline vertex " + std::to_string(i) + " is not finite");
    if (i > 0 && vertices_[i] == vertices_[i - 1])
      throw GeometryError("polyline vertices " + std::to_string(i - 1) + " and " +
                          std::to_string(i) + " coincide");
  }
}

Point2 Polyline::point_at(double s) const {
  if (s <= 0.0) return vertices_.front();
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    const double seg = distance(vertices_[i - 1], vertices_[i]);
    if (s <= seg) return vertices_[i - 1] + (vertices_[i] - vertices_[i - 1]) * (s / seg);
    s -= seg;
  }
  return vertices_.back();
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double aabb_diagonal(std::span<const Point2> points) {
  if (points.empty()) throw GeometryError("aabb_diagonal of empty point set");
  Point2 lo = points.front();
  Point2 hi = points.front();
  for (const Point2& p : points) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  return distance(lo, hi);
}

double signed_area(std::span<const Point2> ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Point2& a = ring[i];
    const Point2& b = ring[(i + 1) % ring.size()];
    twice += cross(a, b);
  }
  return 0.5 * twice;
}

bool point_in_polygon(Point2 p, const Polyline& polygon) {
  std::span<const Point2> ring(polygon.vertices());
  if (ring.size() > 1 && ring.front() == ring.back()) ring = ring.first(ring.size() - 1);
  if (ring.size() < 3 || std::abs(signed_area(ring)) == 0.0)
    throw GeometryError("degenerate polygon (zero area)");

  constexpr double kOnEdge = 1e-12;
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Point2& a = ring[j];
    const Point2& b = ring[i];
    if (point_segment_distance(p, a, b) <= kOnEdge) return true;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double polyline_length(const Polyline& poly) {
  double total = 0.0;
  for (std::size_t i = 1; i < poly.size(); ++i) total += distance(poly[i - 1], poly[i]);
  return total;
}

Point2 centroid(std::span<const Point2> points) {
  if (points.empty()) throw GeometryError("centroid of empty point set");
  Point2 sum;
  for (const Point2& p : points) sum = sum + p;
  return sum / static_cast<double>(points.size());
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

std::optional<double> segment_crossing(Point2 p0, Point2 p1, Point2 q0, Point2 q1) {
  const Point2 r = p1 - p0;
  const Point2 s = q1 - q0;
  const double denom = cross(r, s);
  if (denom == 0.0) return std::nullopt;  // parallel or collinear: grazing, not blocking
  const Point2 qp = q0 - p0;
  const double t = cross(qp, s) / denom;
  const double u = cross(qp, r) / denom;
  constexpr double kEps = 1e-9;
  if (t >= 0.0 && t < 1.0 - kEps && u >= -kEps && u <= 1.0 + kEps) return t;
  return std::nullopt;
}

bool segment_blocks(Point2 p0, Point2 p1, Point2 q0, Point2 q1) {
  return segment_crossing(p0, p1, q0, q1).has_value();
}

}  // namespace borderforge
