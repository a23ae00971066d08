#pragma once

#include "borderforge/extraction.hpp"
#include "borderforge/gridmap.hpp"
#include "borderforge/perception.hpp"
#include "borderforge/planner.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace borderforge {

enum class SessionState : std::uint8_t { Default, Border, Seed, Guide };
enum class Command : std::uint8_t { DefineBorder, DefineSeed, GuideRobot, Save, Cancel };
enum class InteractionMode : std::uint8_t { RobotOnly, NRS };
enum class EventKind : std::uint8_t {
  StateChanged,
  SpotDetected,
  RobotDispatched,
  BorderSaved,
  Cancelled,
  Error
};

[[nodiscard]] const char* to_string(SessionState s);
[[nodiscard]] const char* to_string(Command c);
[[nodiscard]] const char* to_string(InteractionMode m);
[[nodiscard]] const char* to_string(EventKind k);

/// Parsers accept the names produced by to_string (modes also "nrs" and "robot-only");
/// they throw Error otherwise.
[[nodiscard]] Command parse_command(const std::string& name);
[[nodiscard]] InteractionMode parse_mode(const std::string& name);

struct Event {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::StateChanged;
  nlohmann::json payload;
  double sim_time = 0.0;
};

/// One line of the event stream: {"seq","kind","payload","sim_time"}.
[[nodiscard]] nlohmann::json to_json(const Event& e);
[[nodiscard]] std::string to_line(const Event& e);

struct RobotConfig {
  double v_max = 0.2;
  double angular_speed = 0.5;
  double inflation = kDefaultInflation;
  /// Distance kept to a tracked laser spot in Border/Seed so the camera keeps it in view.
  double follow_distance = 1.0;
  /// Standoff while guided; keeps the spot beyond the camera's blind zone near the bumper.
  double guide_distance = 0.5;
  /// Spot moves below this distance do not trigger a replan.
  double replan_distance = 0.15;
  CameraIntrinsics camera{554.0, 554.0, 320.0, 240.0, 640, 480};
  double camera_height = 0.45;
  double camera_pitch = 0.6108652381980153;  // 35 degrees down
  double camera_forward = 0.1;
  double camera_sigma = kDefaultMobileSigma;
  double frame_rate = 30.0;
};

/// Velocity-limited differential robot that follows grid paths.
class RobotSim {
 public:
  RobotSim(Pose2 start, RobotConfig config);

  [[nodiscard]] const Pose2& pose() const { return pose_; }
  [[nodiscard]] const RobotConfig& config() const { return config_; }
  [[nodiscard]] CameraModel camera() const;
  [[nodiscard]] const std::optional<Point2>& dispatch_target() const { return target_; }
  [[nodiscard]] const std::optional<Path>& current_path() const { return path_; }
  [[nodiscard]] const std::optional<Point2>& face_point() const { return face_; }
  [[nodiscard]] bool idle() const { return !path_ && !face_; }

  /// Drives towards `target`, stopping `standoff` short of it and then turning
  /// to face it. Returns the new path when one was planned.
  std::optional<Path> navigate(const InflatedGrid& map, Point2 target, double standoff);
  /// Rotates in place until facing `p`.
  void face(Point2 p);
  void stop();

  /// Advances the simulation; returns the distance travelled.
  double tick(double dt);

 private:
  Pose2 pose_;
  RobotConfig config_;
  std::optional<Point2> target_;
  std::optional<Point2> planned_for_;
  std::optional<Point2> failed_for_;
  std::optional<Path> path_;
  std::size_t next_waypoint_ = 0;
  std::optional<Point2> face_;
  double arrival_tolerance_ = 0.025;
};

struct SessionConfig {
  World world;
  std::vector<CameraModel> stationary_cameras;
  OccupancyGrid prior;
  Pose2 robot_start;
  RobotConfig robot;
  ExtractionParams params;
  InteractionMode mode = InteractionMode::NRS;
  /// Time a button or visual-code state switch costs in RobotOnly mode.
  double switch_latency = 3.0;
};

struct TimingReport {
  double guide = 0.0;
  double border = 0.0;
  double seed = 0.0;
  double total = 0.0;

  friend bool operator==(const TimingReport&, const TimingReport&) = default;
};

/// The Default/Border/Seed/Guide interaction state machine. Single writer:
/// callers serialise commands, spots and ticks.
class InteractionSession {
 public:
  explicit InteractionSession(SessionConfig config);

  std::vector<Event> handle_command(Command cmd);
  std::vector<Event> on_laser_spot(Point2 true_spot, double now, std::uint64_t rng_seed);
  std::vector<Event> tick(double dt);

  /// Turns the robot in place towards `p` (RobotOnly buttons); time accrues through tick().
  void face_robot_toward(Point2 p);

  /// Throws Error unless the session was saved or cancelled.
  [[nodiscard]] TimingReport timing_report() const;

  [[nodiscard]] SessionState state() const { return state_; }
  [[nodiscard]] InteractionMode mode() const { return config_.mode; }
  [[nodiscard]] const SessionConfig& config() const { return config_; }
  [[nodiscard]] const std::vector<Point2>& border_buffer() const { return border_buffer_; }
  [[nodiscard]] const std::vector<Point2>& seed_buffer() const { return seed_buffer_; }
  [[nodiscard]] const RobotSim& robot() const { return robot_; }
  [[nodiscard]] double timer(SessionState s) const { return timers_[static_cast<int>(s)]; }
  [[nodiscard]] const std::optional<OccupancyGrid>& posterior() const { return posterior_; }
  /// Map new borders are integrated into: the latest posterior, else the prior.
  [[nodiscard]] const OccupancyGrid& working_map() const;
  [[nodiscard]] const std::vector<Event>& events() const { return log_; }
  [[nodiscard]] double sim_time() const { return clock_; }
  [[nodiscard]] std::uint64_t map_version() const { return map_version_; }
  [[nodiscard]] std::size_t last_detection_count() const { return last_detections_; }
  [[nodiscard]] bool finished() const { return saved_ || cancelled_; }
  [[nodiscard]] const std::optional<ExtractionResult>& last_extraction() const {
    return last_extraction_;
  }

 private:
  Event& emit(EventKind kind, nlohmann::json payload);
  std::vector<Event> since(std::size_t mark) const;
  void change_state(SessionState next);
  void advance(double dt);
  void steer_robot(const std::vector<GroundPoint>& detections);

  SessionConfig config_;
  std::shared_ptr<const InflatedGrid> nav_map_;
  RobotSim robot_;
  SessionState state_ = SessionState::Default;
  std::vector<Point2> border_buffer_;
  std::vector<Point2> seed_buffer_;
  std::array<double, 4> timers_{};
  std::optional<OccupancyGrid> posterior_;
  std::optional<ExtractionResult> last_extraction_;
  std::vector<Event> log_;
  double clock_ = 0.0;
  std::uint64_t map_version_ = 0;
  std::size_t last_detections_ = 0;
  bool saved_ = false;
  bool cancelled_ = false;
};

}  // namespace borderforge
