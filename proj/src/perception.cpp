#include "borderforge/perception.hpp"

#include <algorithm>
#include <array>
#include <random>

namespace borderforge {

namespace {

constexpr double kParallelTol = 1e-12;

Eigen::Vector3d pixel_ray(const CameraIntrinsics& k, double u, double v) {
  return {(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
}

GroundPoint noisy_detection(const CameraModel& cam, Point2 spot, double timestamp,
                            std::uint64_t seed) {
  Point2 pos = spot;
  if (cam.noise_sigma > 0.0) {
    std::mt19937_64 rng(splitmix64(seed));
    std::normal_distribution<double> noise(0.0, cam.noise_sigma);
    pos.x += noise(rng);
    pos.y += noise(rng);
  }
  return {pos, cam.id, timestamp};
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ProjectionError("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ProjectionError("image size must be positive");
  if (!contains(cx, cy)) throw ProjectionError("principal point outside the image");
}

const char* to_string(CameraKind k) { return k == CameraKind::Stationary ? "stationary" : "mobile"; }

RigidTransform3 nadir_pose(Point2 position, double height, double yaw) {
  const Eigen::Vector3d x_axis(std::cos(yaw), std::sin(yaw), 0.0);
  const Eigen::Vector3d z_axis(0.0, 0.0, -1.0);
  Eigen::Matrix3d r;
  r.col(0) = x_axis;
  r.col(1) = z_axis.cross(x_axis);
  r.col(2) = z_axis;
  return {r, Eigen::Vector3d(position.x, position.y, height)};
}

RigidTransform3 forward_looking_pose(const Eigen::Vector3d& eye, double heading, double pitch) {
  const Eigen::Vector3d z_axis(std::cos(heading) * std::cos(pitch),
                               std::sin(heading) * std::cos(pitch), -std::sin(pitch));
  const Eigen::Vector3d x_axis(std::sin(heading), -std::cos(heading), 0.0);
  Eigen::Matrix3d r;
  r.col(0) = x_axis;
  r.col(1) = z_axis.cross(x_axis);
  r.col(2) = z_axis;
  return {r, eye};
}

Point2 backproject_ground(const CameraModel& cam, double u, double v) {
  if (!cam.intrinsics.contains(u, v)) throw ProjectionError("pixel outside the image");
  const Eigen::Vector3d dir = cam.pose.rotation() * pixel_ray(cam.intrinsics, u, v);
  const Eigen::Vector3d& eye = cam.pose.translation();
  if (std::abs(dir.z()) < kParallelTol)
    throw ProjectionError("viewing ray is parallel to the ground plane");
  const double s = -eye.z() / dir.z();
  if (!(s > 0.0)) throw ProjectionError("viewing ray does not hit the ground in front");
  const Eigen::Vector3d hit = eye + s * dir;
  return {hit.x(), hit.y()};
}

ImageProjection project_to_image(const CameraModel& cam, Point2 p) {
  const Eigen::Vector3d c = cam.pose.apply_inverse(Eigen::Vector3d(p.x, p.y, 0.0));
  ImageProjection out;
  out.in_front = c.z() > kParallelTol;
  if (!out.in_front) return out;
  const auto& k = cam.intrinsics;
  out.u = k.fx * c.x() / c.z() + k.cx;
  out.v = k.fy * c.y() / c.z() + k.cy;
  out.in_image = k.contains(out.u, out.v);
  return out;
}

Polyline fov_polygon(const CameraModel& cam) {
  const auto& k = cam.intrinsics;
  const double w = k.width;
  const double h = k.height;
  std::vector<Point2> ring;
  try {
    ring = {backproject_ground(cam, 0, 0), backproject_ground(cam, w, 0),
            backproject_ground(cam, w, h), backproject_ground(cam, 0, h)};
  } catch (const ProjectionError& e) {
    throw ProjectionError(std::string("camera footprint is unbounded: ") + e.what());
  }
  if (signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());
  ring.push_back(ring.front());
  return Polyline(std::move(ring));
}

Point2 camera_ground_position(const CameraModel& cam) {
  return {cam.pose.translation().x(), cam.pose.translation().y()};
}

bool camera_sees(const World& world, const CameraModel& cam, Point2 p) {
  if (!project_to_image(cam, p).visible()) return false;
  const Point2 from = camera_ground_position(cam);
  const double eye_height = cam.pose.translation().z();
  return std::none_of(world.walls.begin(), world.walls.end(), [&](const WallSegment& w) {
    const std::optional<double> t = segment_crossing(from, p, w.a, w.b);
    return t && eye_height * (1.0 - *t) < w.height;
  });
}

std::vector<GroundPoint> simulate_detection(const World& world,
                                            const std::vector<CameraModel>& cameras,
                                            const CameraModel* robot_camera, Point2 true_spot,
                                            double timestamp, std::uint64_t rng_seed) {
  std::vector<GroundPoint> out;
  const std::uint64_t base = splitmix64(rng_seed);
  for (std::size_t i = 0; i < cameras.size(); ++i)
    if (camera_sees(world, cameras[i], true_spot))
      out.push_back(noisy_detection(cameras[i], true_spot, timestamp, base + i));
  if (robot_camera != nullptr && camera_sees(world, *robot_camera, true_spot))
    out.push_back(noisy_detection(*robot_camera, true_spot, timestamp, base + cameras.size()));
  return out;
}

std::vector<Point2> fuse(const std::vector<std::vector<GroundPoint>>& streams) {
  struct Tagged {
    double timestamp;
    std::size_t stream;
    std::size_t index;
    Point2 position;
  };
  std::vector<Tagged> all;
  for (std::size_t s = 0; s < streams.size(); ++s)
    for (std::size_t i = 0; i < streams[s].size(); ++i)
      all.push_back({streams[s][i].timestamp, s, i, streams[s][i].position});
  std::stable_sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
    return a.timestamp < b.timestamp;
  });
  std::vector<Point2> out;
  out.reserve(all.size());
  for (const Tagged& t : all) out.push_back(t.position);
  return out;
}

}  // namespace borderforge
