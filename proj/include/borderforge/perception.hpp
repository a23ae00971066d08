#pragma once

#include "borderforge/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace borderforge {

class ProjectionError : public Error {
 public:
  using Error::Error;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws ProjectionError on non-positive focal lengths or an outside principal point.
  void validate() const;
  [[nodiscard]] bool contains(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u <= width && v <= height;
  }
};

enum class CameraKind : std::uint8_t { Stationary, Mobile };

[[nodiscard]] const char* to_string(CameraKind k);

inline constexpr double kDefaultStationarySigma = 0.02;
inline constexpr double kDefaultMobileSigma = 0.04;
inline constexpr double kDefaultFrameRate = 25.0;

/// Pinhole camera with the usual optical frame (x right, y down, z forward).
/// `pose` maps camera coordinates into the map frame; the floor is z = 0.
struct CameraModel {
  std::string id;
  CameraIntrinsics intrinsics;
  RigidTransform3 pose;
  CameraKind kind = CameraKind::Stationary;
  double frame_rate = kDefaultFrameRate;
  /// Standard deviation of the isotropic ground-plane detection noise (m).
  double noise_sigma = kDefaultStationarySigma;
};

/// Camera at `position` (height `height`) looking straight down; `yaw` rotates
/// the image x axis away from the map x axis.
[[nodiscard]] RigidTransform3 nadir_pose(Point2 position, double height, double yaw = 0.0);

/// Camera at `eye` whose optical axis points along `heading` in the floor plane
/// and is pitched down by `pitch` radians.
[[nodiscard]] RigidTransform3 forward_looking_pose(const Eigen::Vector3d& eye, double heading,
                                                   double pitch);

struct ImageProjection {
  double u = 0.0;
  double v = 0.0;
  bool in_front = false;
  bool in_image = false;
  [[nodiscard]] bool visible() const { return in_front && in_image; }
};

/// Intersection of the pixel's viewing ray with the floor plane.
[[nodiscard]] Point2 backproject_ground(const CameraModel& cam, double u, double v);

[[nodiscard]] ImageProjection project_to_image(const CameraModel& cam, Point2 p);

/// Floor footprint of the image as a closed counterclockwise quadrilateral
/// (five vertices, last equal to first).
[[nodiscard]] Polyline fov_polygon(const CameraModel& cam);

/// Ground position directly beneath the optical centre.
[[nodiscard]] Point2 camera_ground_position(const CameraModel& cam);

struct WallSegment {
  Point2 a;
  Point2 b;
  double thickness = 0.05;
  double height = 0.8;
};

/// Static geometry visible to the detector simulation.
struct World {
  double width = 0.0;
  double height = 0.0;
  std::vector<WallSegment> walls;

  [[nodiscard]] bool contains(Point2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height;
  }
};

/// Seed mixer used to derive independent per-camera and per-frame streams.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct GroundPoint {
  Point2 position;
  std::string source;
  double timestamp = 0.0;
};

/// True when `cam` sees floor point `p`: inside the footprint and the sight
/// line passes above every wall it crosses.
[[nodiscard]] bool camera_sees(const World& world, const CameraModel& cam, Point2 p);

/// Simulates each camera's laser-spot detector for one frame. Deterministic in `rng_seed`.
[[nodiscard]] std::vector<GroundPoint> simulate_detection(const World& world,
                                                          const std::vector<CameraModel>& cameras,
                                                          const CameraModel* robot_camera,
                                                          Point2 true_spot, double timestamp,
                                                          std::uint64_t rng_seed);

/// Merges per-camera streams into one point set ordered by timestamp.
[[nodiscard]] std::vector<Point2> fuse(const std::vector<std::vector<GroundPoint>>& streams);

}  // namespace borderforge
