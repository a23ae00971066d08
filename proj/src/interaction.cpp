#include "borderforge/interaction.hpp"

#include <cmath>
#include <utility>

namespace borderforge {

namespace {

constexpr double kGoalSearchRadius = 1.0;
constexpr double kStartSearchRadius = 0.5;
constexpr double kTiny = 1e-9;
constexpr const char* kRobotCameraId = "robot";

nlohmann::json point_json(Point2 p) { return nlohmann::json::array({p.x, p.y}); }

double waypoint_length(const std::vector<Point2>& w) {
  double total = 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) total += distance(w[i - 1], w[i]);
  return total;
}

}  // namespace

const char* to_string(SessionState s) {
  switch (s) {
    case SessionState::Default: return "Default";
    case SessionState::Border: return "Border";
    case SessionState::Seed: return "Seed";
    case SessionState::Guide: return "Guide";
  }
  return "?";
}

const char* to_string(Command c) {
  switch (c) {
    case Command::DefineBorder: return "DefineBorder";
    case Command::DefineSeed: return "DefineSeed";
    case Command::GuideRobot: return "GuideRobot";
    case Command::Save: return "Save";
    case Command::Cancel: return "Cancel";
  }
  return "?";
}

const char* to_string(InteractionMode m) {
  return m == InteractionMode::RobotOnly ? "RobotOnly" : "NRS";
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::StateChanged: return "StateChanged";
    case EventKind::SpotDetected: return "SpotDetected";
    case EventKind::RobotDispatched: return "RobotDispatched";
    case EventKind::BorderSaved: return "BorderSaved";
    case EventKind::Cancelled: return "Cancelled";
    case EventKind::Error: return "Error";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::DefineBorder, Command::DefineSeed, Command::GuideRobot, Command::Save,
                    Command::Cancel})
    if (name == to_string(c)) return c;
  throw Error("unknown command '" + name + "'");
}

InteractionMode parse_mode(const std::string& name) {
  if (name == "RobotOnly" || name == "robot-only") return InteractionMode::RobotOnly;
  if (name == "NRS" || name == "nrs") return InteractionMode::NRS;
  throw Error("unknown mode '" + name + "'");
}

nlohmann::json to_json(const Event& e) {
  return {{"seq", e.seq}, {"kind", to_string(e.kind)}, {"payload", e.payload},
          {"sim_time", e.sim_time}};
}

std::string to_line(const Event& e) { return to_json(e).dump(); }

// --- RobotSim ---------------------------------------------------------------

RobotSim::RobotSim(Pose2 start, RobotConfig config) : pose_(start), config_(std::move(config)) {
  if (!(config_.v_max > 0.0) || !(config_.angular_speed > 0.0))
    throw Error("robot speeds must be positive");
  config_.camera.validate();
}

CameraModel RobotSim::camera() const {
  const Point2 eye = pose_.transform({config_.camera_forward, 0.0});
  CameraModel cam{kRobotCameraId, config_.camera,
                  forward_looking_pose({eye.x, eye.y, config_.camera_height}, pose_.theta,
                                       config_.camera_pitch),
                  CameraKind::Mobile, config_.frame_rate, config_.camera_sigma};
  return cam;
}

std::optional<Path> RobotSim::navigate(const InflatedGrid& map, Point2 target, double standoff) {
  const Point2 here = pose_.position;
  const double replan = config_.replan_distance;
  arrival_tolerance_ = map.grid().resolution();
  target_ = target;
  if (distance(here, target) > arrival_tolerance_) face_ = target;

  // Idle robots tolerate small spot motion around the standoff ring instead of replanning.
  const double slack = standoff > 0.0 ? replan : arrival_tolerance_;
  if (distance(here, target) <= standoff + (path_ ? kTiny : slack)) {
    path_.reset();
    planned_for_ = target;
    return std::nullopt;
  }
  if (path_ && planned_for_ && distance(*planned_for_, target) < replan) return std::nullopt;
  if (failed_for_ && distance(*failed_for_, target) < replan) return std::nullopt;

  const auto fail = [&] {
    failed_for_ = target;
    return std::nullopt;
  };
  if (!map.grid().in_bounds(target) || !map.grid().in_bounds(here)) return fail();
  const std::optional<Point2> goal = map.nearest_free(target, kGoalSearchRadius);
  const std::optional<Point2> start = map.nearest_free(here, kStartSearchRadius);
  if (!goal || !start) return fail();
  std::optional<Path> path;
  try {
    path = map.plan(*start, *goal);
  } catch (const PlanningError&) {
    return fail();
  }
  if (!path) return fail();

  if (standoff > 0.0) {
    for (std::size_t i = 0; i < path->waypoints.size(); ++i) {
      if (distance(path->waypoints[i], target) <= standoff) {
        path->waypoints.resize(i + 1);
        path->cells.resize(i + 1);
        break;
      }
    }
  }
  path->length = waypoint_length(path->waypoints);
  path_ = path;
  // The robot already stands inside the start cell; heading back to its centre would reverse it.
  next_waypoint_ = path->waypoints.size() > 1 &&
                           world_to_cell(map.grid(), here) == path->cells.front()
                       ? 1
                       : 0;
  planned_for_ = target;
  failed_for_.reset();
  return path;
}

void RobotSim::face(Point2 p) {
  path_.reset();
  face_ = p;
}

void RobotSim::stop() {
  path_.reset();
  target_.reset();
  face_.reset();
  planned_for_.reset();
  failed_for_.reset();
}

double RobotSim::tick(double dt) {
  double budget = config_.v_max * dt;
  double moved = 0.0;
  Point2 pos = pose_.position;
  double theta = pose_.theta;

  if (path_) {
    const std::vector<Point2>& wps = path_->waypoints;
    while (budget > kTiny && next_waypoint_ < wps.size()) {
      const Point2 wp = wps[next_waypoint_];
      const Point2 delta = wp - pos;
      const double d = delta.norm();
      if (d > kTiny) theta = std::atan2(delta.y, delta.x);
      if (d <= budget) {
        pos = wp;
        budget -= d;
        moved += d;
        ++next_waypoint_;
      } else {
        pos = pos + delta * (budget / d);
        moved += budget;
        budget = 0.0;
      }
    }
    if (next_waypoint_ >= wps.size()) {
      if (distance(pos, wps.back()) <= arrival_tolerance_) target_.reset();
      path_.reset();
    }
  }

  if (!path_ && face_ && moved == 0.0) {
    const Point2 delta = *face_ - pos;
    if (delta.norm() <= kTiny) {
      face_.reset();
    } else {
      const double desired = std::atan2(delta.y, delta.x);
      const double turn = normalize_angle(desired - theta);
      const double step = config_.angular_speed * dt;
      if (std::abs(turn) <= step) {
        theta = desired;
        face_.reset();
      } else {
        theta += std::copysign(step, turn);
      }
    }
  }
  pose_ = Pose2(pos, theta);
  return moved;
}

// --- InteractionSession -----------------------------------------------------

InteractionSession::InteractionSession(SessionConfig config)
    : config_(std::move(config)),
      nav_map_(std::make_shared<InflatedGrid>(config_.prior, config_.robot.inflation)),
      robot_(config_.robot_start, config_.robot) {
  config_.params.validate();
  if (!(config_.switch_latency >= 0.0)) throw Error("switch latency must be nonnegative");
  for (const CameraModel& cam : config_.stationary_cameras) cam.intrinsics.validate();
}

const OccupancyGrid& InteractionSession::working_map() const {
  return posterior_ ? *posterior_ : config_.prior;
}

Event& InteractionSession::emit(EventKind kind, nlohmann::json payload) {
  log_.push_back({log_.size() + 1, kind, std::move(payload), clock_});
  return log_.back();
}

std::vector<Event> InteractionSession::since(std::size_t mark) const {
  return {log_.begin() + static_cast<std::ptrdiff_t>(mark), log_.end()};
}

void InteractionSession::change_state(SessionState next) {
  if (next == state_) return;
  const SessionState prev = state_;
  state_ = next;
  emit(EventKind::StateChanged, {{"from", to_string(prev)}, {"to", to_string(next)}});
}

void InteractionSession::advance(double dt) {
  if (dt <= 0.0) return;
  robot_.tick(dt);
  if (state_ != SessionState::Default) timers_[static_cast<int>(state_)] += dt;
  clock_ += dt;
}

std::vector<Event> InteractionSession::tick(double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw Error("tick duration must be finite and nonnegative");
  const std::size_t mark = log_.size();
  advance(dt);
  return since(mark);
}

void InteractionSession::face_robot_toward(Point2 p) {
  if (!p.finite()) throw Error("face target must be finite");
  robot_.face(p);
}

std::vector<Event> InteractionSession::handle_command(Command cmd) {
  const std::size_t mark = log_.size();
  const bool robot_only = config_.mode == InteractionMode::RobotOnly;
  switch (cmd) {
    case Command::Cancel:
      robot_.stop();
      border_buffer_.clear();
      seed_buffer_.clear();
      change_state(SessionState::Default);
      emit(EventKind::Cancelled, nlohmann::json::object());
      cancelled_ = true;
      break;

    case Command::DefineBorder:
    case Command::DefineSeed:
    case Command::GuideRobot: {
      const SessionState next = cmd == Command::DefineBorder ? SessionState::Border
                                : cmd == Command::DefineSeed ? SessionState::Seed
                                                             : SessionState::Guide;
      if (next == state_) break;
      const SessionState prev = state_;
      if (prev == SessionState::Guide) robot_.stop();
      change_state(next);
      if (robot_only && prev != SessionState::Default) advance(config_.switch_latency);
      break;
    }

    case Command::Save: {
      const auto fail = [&](const std::string& stage, const std::string& message) {
        emit(EventKind::Error, {{"stage", stage}, {"message", message}});
      };
      if (border_buffer_.empty() || seed_buffer_.empty()) {
        fail("save", "nothing to save");
        break;
      }
      std::optional<ExtractionResult> extracted;
      std::optional<OccupancyGrid> integrated;
      try {
        extracted = extract_border_detailed(border_buffer_, seed_buffer_, config_.params);
        integrated = integrate_border(working_map(), extracted->border);
      } catch (const ExtractionError& e) {
        fail(e.stage(), e.what());
        break;
      } catch (const Error& e) {
        fail("integration", e.what());
        break;
      }
      if (robot_only && state_ != SessionState::Default) advance(config_.switch_latency);
      robot_.stop();
      const ExtractionResult& result = *extracted;
      nav_map_ = std::make_shared<InflatedGrid>(*integrated, config_.robot.inflation);
      posterior_ = std::move(integrated);
      ++map_version_;
      nlohmann::json chain = nlohmann::json::array();
      for (const Point2& p : result.border.chain.vertices()) chain.push_back(point_json(p));
      emit(EventKind::BorderSaved,
           {{"map_version", map_version_},
            {"kind", to_string(result.border.kind)},
            {"chain", chain},
            {"seed", point_json(result.border.seed)},
            {"border_points", border_buffer_.size()},
            {"seed_points", seed_buffer_.size()},
            {"dropped", result.diagnostics.dropped_points}});
      last_extraction_ = std::move(extracted);
      border_buffer_.clear();
      seed_buffer_.clear();
      change_state(SessionState::Default);
      saved_ = true;
      break;
    }
  }
  return since(mark);
}

std::vector<Event> InteractionSession::on_laser_spot(Point2 true_spot, double now,
                                                     std::uint64_t rng_seed) {
  if (!true_spot.finite()) throw Error("laser spot must be finite");
  const std::size_t mark = log_.size();
  last_detections_ = 0;
  if (state_ == SessionState::Default) return {};

  static const std::vector<CameraModel> kNone;
  const std::vector<CameraModel>& cams =
      config_.mode == InteractionMode::NRS ? config_.stationary_cameras : kNone;
  const CameraModel robot_cam = robot_.camera();
  std::vector<GroundPoint> detections =
      simulate_detection(config_.world, cams, &robot_cam, true_spot, now, rng_seed);
  // Noise can push a spot next to the outer wall off the map; such points cannot be integrated.
  std::erase_if(detections, [&](const GroundPoint& g) { return !working_map().in_bounds(g.position); });
  last_detections_ = detections.size();
  if (detections.empty()) return {};

  std::vector<Point2>* buffer = state_ == SessionState::Border ? &border_buffer_
                                : state_ == SessionState::Seed ? &seed_buffer_
                                                               : nullptr;
  nlohmann::json list = nlohmann::json::array();
  for (const GroundPoint& g : detections) {
    if (buffer != nullptr) buffer->push_back(g.position);
    list.push_back({{"camera", g.source}, {"x", g.position.x}, {"y", g.position.y}});
  }
  emit(EventKind::SpotDetected, {{"state", to_string(state_)},
                                 {"detections", list},
                                 {"buffer_size", buffer != nullptr ? buffer->size() : 0}});
  steer_robot(detections);
  return since(mark);
}

void InteractionSession::steer_robot(const std::vector<GroundPoint>& detections) {
  Point2 sum;
  std::size_t stationary = 0;
  std::optional<Point2> onboard;
  for (const GroundPoint& g : detections) {
    if (g.source == kRobotCameraId) {
      onboard = g.position;
    } else {
      sum = sum + g.position;
      ++stationary;
    }
  }
  const double standoff = state_ == SessionState::Guide ? config_.robot.guide_distance
                                                        : config_.robot.follow_distance;
  if (stationary > 0) {
    const Point2 target = sum / static_cast<double>(stationary);
    if (const std::optional<Path> path = robot_.navigate(*nav_map_, target, standoff))
      emit(EventKind::RobotDispatched,
           {{"target", point_json(target)}, {"path_length", path->length}});
  } else if (onboard) {
    robot_.navigate(*nav_map_, *onboard, standoff);
  }
}

TimingReport InteractionSession::timing_report() const {
  if (!finished()) throw Error("session has not been saved or cancelled");
  TimingReport r;
  r.guide = timer(SessionState::Guide);
  r.border = timer(SessionState::Border);
  r.seed = timer(SessionState::Seed);
  r.total = r.guide + r.border + r.seed;
  return r;
}

}  // namespace borderforge
