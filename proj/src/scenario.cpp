#include "borderforge/scenario.hpp"

#include "borderforge/map_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace borderforge {

namespace {

using nlohmann::json;

constexpr double kLabWidth = 8.0;
constexpr double kLabHeight = 5.0;
constexpr double kCeiling = 2.95;
constexpr double kWall = 0.05;
constexpr double kOuterWallHeight = 2.5;

const CameraIntrinsics kCeilingCamera{1400.0, 1400.0, 960.0, 540.0, 1920, 1080};

// --- JSON helpers -------------------------------------------------------------

json point_json(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ScenarioError(field, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ScenarioError(path + key, "missing");
  return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw ScenarioError(path + key, "expected a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
  return j.contains(key) ? number(j, key, path) : fallback;
}

json pose_json(const Pose2& p) {
  return {{"x", p.position.x}, {"y", p.position.y}, {"theta", p.theta}};
}

Pose2 pose_from(const json& j, const std::string& path) {
  return Pose2({number(j, "x", path + "."), number(j, "y", path + ".")},
               number_or(j, "theta", 0.0, path + "."));
}

json polyline_json(const Polyline& p) {
  json out = json::array();
  for (const Point2& v : p.vertices()) out.push_back(point_json(v));
  return out;
}

Polyline polyline_from(const json& j, const std::string& field) {
  if (!j.is_array()) throw ScenarioError(field, "expected a list of points");
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < j.size(); ++i)
    pts.push_back(point_from(j[i], field + "[" + std::to_string(i) + "]"));
  try {
    return Polyline(std::move(pts));
  } catch (const GeometryError& e) {
    throw ScenarioError(field, e.what());
  }
}

json camera_json(const CameraModel& c) {
  const Eigen::Matrix3d& r = c.pose.rotation();
  const Eigen::Vector3d& t = c.pose.translation();
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({r(i, 0), r(i, 1), r(i, 2)});
  return {{"id", c.id},
          {"intrinsics",
           {{"fx", c.intrinsics.fx},
            {"fy", c.intrinsics.fy},
            {"cx", c.intrinsics.cx},
            {"cy", c.intrinsics.cy},
            {"width", c.intrinsics.width},
            {"height", c.intrinsics.height}}},
          {"rotation", rows},
          {"translation", {t.x(), t.y(), t.z()}},
          {"frame_rate", c.frame_rate}};
}

CameraModel camera_from(const json& j, const std::string& path) {
  CameraModel c;
  const json& id = require(j, "id", path);
  if (!id.is_string()) throw ScenarioError(path + "id", "expected a string");
  c.id = id.get<std::string>();
  const json& k = require(j, "intrinsics", path);
  const std::string kp = path + "intrinsics.";
  c.intrinsics = {number(k, "fx", kp), number(k, "fy", kp), number(k, "cx", kp),
                  number(k, "cy", kp), static_cast<int>(number(k, "width", kp)),
                  static_cast<int>(number(k, "height", kp))};
  try {
    c.intrinsics.validate();
    if (j.contains("nadir")) {
      const json& n = j.at("nadir");
      c.pose = nadir_pose(point_from(require(n, "position", path + "nadir."), path + "nadir.position"),
                          number(n, "height", path + "nadir."),
                          number_or(n, "yaw", 0.0, path + "nadir."));
    } else {
      const json& rows = require(j, "rotation", path);
      const json& t = require(j, "translation", path);
      if (!rows.is_array() || rows.size() != 3) throw ScenarioError(path + "rotation", "expected 3x3");
      if (!t.is_array() || t.size() != 3) throw ScenarioError(path + "translation", "expected 3 values");
      Eigen::Matrix3d r;
      for (int i = 0; i < 3; ++i) {
        if (!rows[i].is_array() || rows[i].size() != 3)
          throw ScenarioError(path + "rotation", "expected 3x3");
        for (int col = 0; col < 3; ++col) r(i, col) = rows[i][col].get<double>();
      }
      c.pose = RigidTransform3(r, {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()});
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const json::exception& e) {
    throw ScenarioError(path + "rotation", e.what());
  } catch (const Error& e) {
    throw ScenarioError(path + "pose", e.what());
  }
  c.kind = CameraKind::Stationary;
  c.frame_rate = number_or(j, "frame_rate", kDefaultFrameRate, path);
  return c;
}

json params_json(const ExtractionParams& p) {
  json j = {{"eps", p.eps},         {"min_pts", p.min_pts},     {"min_exp", p.min_exp},
            {"min_size", p.min_size}, {"thin_dist", p.thin_dist}, {"poly_dist", p.poly_dist},
            {"closure_dist", p.closure_dist}};
  j["max_exp"] = std::isinf(p.max_exp) ? json(nullptr) : json(p.max_exp);
  return j;
}

ExtractionParams params_from(const json& j, const std::string& path) {
  ExtractionParams p;
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  p.eps = number_or(j, "eps", p.eps, path + ".");
  p.min_pts = static_cast<int>(number_or(j, "min_pts", p.min_pts, path + "."));
  p.min_exp = number_or(j, "min_exp", p.min_exp, path + ".");
  if (j.contains("max_exp") && !j.at("max_exp").is_null()) p.max_exp = number(j, "max_exp", path + ".");
  p.min_size = static_cast<int>(number_or(j, "min_size", p.min_size, path + "."));
  p.thin_dist = number_or(j, "thin_dist", p.thin_dist, path + ".");
  p.poly_dist = number_or(j, "poly_dist", p.poly_dist, path + ".");
  p.closure_dist = number_or(j, "closure_dist", p.closure_dist, path + ".");
  return p;
}

// --- builtin lab ------------------------------------------------------------

std::vector<WallSegment> lab_walls() {
  const double h = kWall / 2.0;
  std::vector<WallSegment> walls = {
      {{0.0, h}, {kLabWidth, h}, kWall, kOuterWallHeight},
      {{0.0, kLabHeight - h}, {kLabWidth, kLabHeight - h}, kWall, kOuterWallHeight},
      {{h, 0.0}, {h, kLabHeight}, kWall, kOuterWallHeight},
      {{kLabWidth - h, 0.0}, {kLabWidth - h, kLabHeight}, kWall, kOuterWallHeight},
  };
  // Adjustable walls forming the top-left room with a 0.70 m doorway.
  walls.push_back({{0.0, 2.475}, {2.3, 2.475}});
  walls.push_back({{3.0, 2.475}, {3.35, 2.475}});
  walls.push_back({{3.325, 2.45}, {3.325, kLabHeight}});
  return walls;
}

CameraModel ceiling_camera(const std::string& id, Point2 at, double yaw) {
  return {id, kCeilingCamera, nadir_pose(at, kCeiling, yaw), CameraKind::Stationary,
          kDefaultFrameRate, kDefaultStationarySigma};
}

Scenario lab(const std::string& name) {
  Scenario sc;
  sc.name = name;
  sc.width = kLabWidth;
  sc.height = kLabHeight;
  sc.walls = lab_walls();
  sc.cameras = {ceiling_camera("red", {1.7, 3.2}, 0.0), ceiling_camera("green", {3.9, 2.6}, 0.0),
                ceiling_camera("blue", {3.0, 1.6}, std::numbers::pi / 2.0)};
  sc.robot_start = Pose2({6.6, 0.45}, std::numbers::pi);
  for (const CameraModel& c : sc.cameras) sc.noise_sigma[c.id] = kDefaultStationarySigma;
  sc.noise_sigma["robot"] = kDefaultMobileSigma;
  return sc;
}

/// Small square the user circles while pointing at a seed.
Polyline seed_wiggle(Point2 c) {
  const double r = 0.03;
  return Polyline({{c.x - r, c.y - r}, {c.x + r, c.y - r}, {c.x + r, c.y + r}, {c.x - r, c.y + r},
                   {c.x - r, c.y - r}});
}

constexpr double kSeedDwell = 8.0;
/// The room seed is indicated with a longer sweep.
constexpr double kRoomSeedDwell = 12.0;

Scenario room_exclusion() {
  Scenario sc = lab("room-exclusion");
  const Polyline door({{2.3, 2.47}, {3.0, 2.47}});
  sc.ground_truth_border = {door, {1.6, 3.7}, 1.0, BorderKind::SeparatingCurve};
  sc.guide_goal = Pose2({1.5, 1.4}, std::numbers::pi / 2.0);
  sc.strokes = {{door, StrokePurpose::Border, 0.0},
                {seed_wiggle({2.65, 3.1}), StrokePurpose::Seed, kRoomSeedDwell}};
  return sc;
}

Scenario carpet_exclusion() {
  Scenario sc = lab("carpet-exclusion");
  const double x0 = 3.4, x1 = 5.4, y0 = 1.5, y1 = 2.75;
  const Polyline carpet({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}});
  const Point2 centre{(x0 + x1) / 2.0, (y0 + y1) / 2.0};
  sc.ground_truth_border = {carpet, centre, 1.0, BorderKind::Polygon};
  sc.guide_goal = Pose2({4.25, 0.95}, std::numbers::pi / 2.0);
  const double xm = (x0 + x1) / 2.0;
  const Polyline loop({{xm, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}, {xm, y0}});
  sc.strokes = {{loop, StrokePurpose::Border, 0.0},
                {seed_wiggle(centre), StrokePurpose::Seed, kSeedDwell}};
  return sc;
}

Scenario spot_cleaning() {
  Scenario sc = lab("spot-cleaning");
  const Polyline corner({{2.05, 0.05}, {2.05, 1.65}, {0.05, 1.65}});
  sc.ground_truth_border = {corner, {4.0, 0.9}, 1.0, BorderKind::SeparatingCurve};
  sc.guide_goal = Pose2({3.4, 0.5}, std::numbers::pi);
  sc.strokes = {{corner, StrokePurpose::Border, 0.0},
                {seed_wiggle({2.6, 1.3}), StrokePurpose::Seed, kSeedDwell}};
  return sc;
}

bool inside(const Scenario& sc, Point2 p) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= sc.width && p.y <= sc.height;
}

}  // namespace

ScenarioError::ScenarioError(std::string field, const std::string& what)
    : Error(field + ": " + what), field_(std::move(field)) {}

const char* to_string(StrokePurpose p) { return p == StrokePurpose::Border ? "Border" : "Seed"; }

World Scenario::world() const { return {width, height, walls}; }

std::vector<CameraModel> Scenario::stationary_cameras() const {
  std::vector<CameraModel> out = cameras;
  for (CameraModel& c : out)
    if (const auto it = noise_sigma.find(c.id); it != noise_sigma.end()) c.noise_sigma = it->second;
  return out;
}

RobotConfig Scenario::robot_config() const {
  RobotConfig r = robot;
  if (const auto it = noise_sigma.find("robot"); it != noise_sigma.end()) r.camera_sigma = it->second;
  return r;
}

void Scenario::validate() const {
  if (name.empty()) throw ScenarioError("name", "must not be empty");
  if (!(width > 0.0) || !(height > 0.0)) throw ScenarioError("bounds", "must be positive");
  if (!(resolution > 0.0)) throw ScenarioError("resolution", "must be positive");
  if (!inside(*this, robot_start.position)) throw ScenarioError("robot_start", "outside bounds");
  if (!inside(*this, guide_goal.position)) throw ScenarioError("guide_goal", "outside bounds");
  for (const Point2& p : ground_truth_border.chain.vertices())
    if (!inside(*this, p)) throw ScenarioError("ground_truth_border.chain", "outside bounds");
  if (!inside(*this, ground_truth_border.seed))
    throw ScenarioError("ground_truth_border.seed", "outside bounds");
  bool has_border = false;
  bool has_seed = false;
  for (std::size_t i = 0; i < strokes.size(); ++i) {
    for (const Point2& p : strokes[i].polyline.vertices())
      if (!inside(*this, p))
        throw ScenarioError("strokes[" + std::to_string(i) + "].polyline", "outside bounds");
    if (strokes[i].dwell < 0.0)
      throw ScenarioError("strokes[" + std::to_string(i) + "].dwell", "must be nonnegative");
    (strokes[i].purpose == StrokePurpose::Border ? has_border : has_seed) = true;
  }
  if (!has_border || !has_seed) throw ScenarioError("strokes", "need a border and a seed stroke");
  if (!(stroke_speed > 0.0)) throw ScenarioError("stroke_speed", "must be positive");
  if (!(switch_latency >= 0.0)) throw ScenarioError("switch_latency", "must be nonnegative");
  if (!(aim_time >= 0.0)) throw ScenarioError("aim_time", "must be nonnegative");
  for (const auto& [id, sigma] : noise_sigma)
    if (!(sigma >= 0.0)) throw ScenarioError("noise_sigma." + id, "must be nonnegative");
  try {
    params.validate();
  } catch (const ExtractionError& e) {
    throw ScenarioError("params", e.what());
  }
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    try {
      cameras[i].intrinsics.validate();
    } catch (const Error& e) {
      throw ScenarioError("cameras[" + std::to_string(i) + "].intrinsics", e.what());
    }
  }
}

OccupancyGrid rasterize_walls(double width, double height, double resolution,
                              const std::vector<WallSegment>& walls) {
  const int w = static_cast<int>(std::lround(width / resolution));
  const int h = static_cast<int>(std::lround(height / resolution));
  OccupancyGrid grid(w, h, resolution, Pose2(), Occupancy::Free);
  constexpr double kTol = 1e-9;
  for (const WallSegment& wall : walls) {
    const Point2 axis = wall.b - wall.a;
    const double len = axis.norm();
    if (len == 0.0) continue;
    const Point2 dir = axis / len;
    const double half = wall.thickness / 2.0;
    const double lo_x = std::min(wall.a.x, wall.b.x) - half;
    const double hi_x = std::max(wall.a.x, wall.b.x) + half;
    const double lo_y = std::min(wall.a.y, wall.b.y) - half;
    const double hi_y = std::max(wall.a.y, wall.b.y) + half;
    const int c0 = std::max(0, static_cast<int>(std::floor(lo_x / resolution)) - 1);
    const int c1 = std::min(w - 1, static_cast<int>(std::ceil(hi_x / resolution)) + 1);
    const int r0 = std::max(0, static_cast<int>(std::floor(lo_y / resolution)) - 1);
    const int r1 = std::min(h - 1, static_cast<int>(std::ceil(hi_y / resolution)) + 1);
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const Point2 rel = cell_to_world(grid, {col, row}) - wall.a;
        const double along = dot(rel, dir);
        const double across = std::abs(cross(dir, rel));
        if (along >= -kTol && along <= len + kTol && across <= half + kTol)
          grid.set({col, row}, Occupancy::Occupied);
      }
    }
  }
  return grid;
}

OccupancyGrid build_prior(const Scenario& sc) {
  if (sc.prior_map) return load_map(*sc.prior_map);
  return rasterize_walls(sc.width, sc.height, sc.resolution, sc.walls);
}

OccupancyGrid ground_truth_map(const Scenario& sc, const OccupancyGrid& prior) {
  return integrate_border(prior, sc.ground_truth_border);
}

SessionConfig session_config(const Scenario& sc, const OccupancyGrid& prior, InteractionMode mode) {
  return {sc.world(), sc.stationary_cameras(), prior,           sc.robot_start,
          sc.robot_config(), sc.params,        mode,            sc.switch_latency};
}

Scenario scale_noise(Scenario sc, double factor) {
  for (CameraModel& c : sc.cameras)
    if (!sc.noise_sigma.contains(c.id)) sc.noise_sigma[c.id] = c.noise_sigma;
  if (!sc.noise_sigma.contains("robot")) sc.noise_sigma["robot"] = sc.robot.camera_sigma;
  for (auto& [id, sigma] : sc.noise_sigma) sigma *= factor;
  return sc;
}

std::vector<Scenario> builtin_scenarios() {
  return {room_exclusion(), carpet_exclusion(), spot_cleaning()};
}

Scenario builtin_scenario(int index) {
  if (index < 1 || index > 3) throw ScenarioError("scenario", "builtin index must be 1, 2 or 3");
  return builtin_scenarios()[static_cast<std::size_t>(index - 1)];
}

json params_to_json(const ExtractionParams& p) { return params_json(p); }

ExtractionParams params_from_json(const json& j) {
  ExtractionParams p = params_from(j, "params");
  try {
    p.validate();
  } catch (const ExtractionError& e) {
    throw ScenarioError("params", e.what());
  }
  return p;
}

json scenario_to_json(const Scenario& sc) {
  json walls = json::array();
  for (const WallSegment& w : sc.walls)
    walls.push_back({{"a", point_json(w.a)},
                     {"b", point_json(w.b)},
                     {"thickness", w.thickness},
                     {"height", w.height}});
  json cameras = json::array();
  for (const CameraModel& c : sc.cameras) cameras.push_back(camera_json(c));
  json strokes = json::array();
  for (const ScriptedStroke& s : sc.strokes)
    strokes.push_back(
        {{"purpose", to_string(s.purpose)}, {"polyline", polyline_json(s.polyline)}, {"dwell", s.dwell}});
  json noise = json::object();
  for (const auto& [id, sigma] : sc.noise_sigma) noise[id] = sigma;
  const RobotConfig& r = sc.robot;
  json j = {
      {"name", sc.name},
      {"bounds", {sc.width, sc.height}},
      {"resolution", sc.resolution},
      {"walls", walls},
      {"prior_map", sc.prior_map ? json(sc.prior_map->string()) : json(nullptr)},
      {"cameras", cameras},
      {"robot_start", pose_json(sc.robot_start)},
      {"guide_goal", pose_json(sc.guide_goal)},
      {"ground_truth_border",
       {{"chain", polyline_json(sc.ground_truth_border.chain)},
        {"seed", point_json(sc.ground_truth_border.seed)},
        {"occupancy", sc.ground_truth_border.occupancy},
        {"kind", sc.ground_truth_border.kind == BorderKind::Polygon ? "Polygon" : "SeparatingCurve"}}},
      {"strokes", strokes},
      {"stroke_speed", sc.stroke_speed},
      {"params", params_json(sc.params)},
      {"noise_sigma", noise},
      {"robot",
       {{"v_max", r.v_max},
        {"angular_speed", r.angular_speed},
        {"inflation", r.inflation},
        {"follow_distance", r.follow_distance},
        {"replan_distance", r.replan_distance},
        {"camera_height", r.camera_height},
        {"camera_pitch", r.camera_pitch},
        {"camera_forward", r.camera_forward}}},
      {"switch_latency", sc.switch_latency},
      {"aim_time", sc.aim_time},
  };
  return j;
}

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ScenarioError("", "scenario must be an object");
  Scenario sc;
  const json& name = require(j, "name", "");
  if (!name.is_string()) throw ScenarioError("name", "expected a string");
  sc.name = name.get<std::string>();
  const Point2 bounds = point_from(require(j, "bounds", ""), "bounds");
  sc.width = bounds.x;
  sc.height = bounds.y;
  sc.resolution = number_or(j, "resolution", sc.resolution, "");

  if (j.contains("walls")) {
    const json& walls = j.at("walls");
    if (!walls.is_array()) throw ScenarioError("walls", "expected a list");
    for (std::size_t i = 0; i < walls.size(); ++i) {
      const std::string p = "walls[" + std::to_string(i) + "].";
      WallSegment w{point_from(require(walls[i], "a", p), p + "a"),
                    point_from(require(walls[i], "b", p), p + "b")};
      w.thickness = number_or(walls[i], "thickness", w.thickness, p);
      w.height = number_or(walls[i], "height", w.height, p);
      sc.walls.push_back(w);
    }
  }
  if (j.contains("prior_map") && !j.at("prior_map").is_null()) {
    if (!j.at("prior_map").is_string()) throw ScenarioError("prior_map", "expected a path");
    std::filesystem::path p = j.at("prior_map").get<std::string>();
    sc.prior_map = p.is_relative() ? base_dir / p : p;
  }
  if (j.contains("cameras")) {
    const json& cams = j.at("cameras");
    if (!cams.is_array()) throw ScenarioError("cameras", "expected a list");
    for (std::size_t i = 0; i < cams.size(); ++i)
      sc.cameras.push_back(camera_from(cams[i], "cameras[" + std::to_string(i) + "]."));
  }
  sc.robot_start = pose_from(require(j, "robot_start", ""), "robot_start");
  sc.guide_goal = j.contains("guide_goal") ? pose_from(j.at("guide_goal"), "guide_goal") : sc.robot_start;

  const json& gt = require(j, "ground_truth_border", "");
  sc.ground_truth_border.chain = polyline_from(require(gt, "chain", "ground_truth_border."),
                                               "ground_truth_border.chain");
  sc.ground_truth_border.seed =
      point_from(require(gt, "seed", "ground_truth_border."), "ground_truth_border.seed");
  sc.ground_truth_border.occupancy = number_or(gt, "occupancy", 1.0, "ground_truth_border.");
  const std::string kind = gt.value("kind", std::string("SeparatingCurve"));
  if (kind == "Polygon") {
    sc.ground_truth_border.kind = BorderKind::Polygon;
  } else if (kind == "SeparatingCurve") {
    sc.ground_truth_border.kind = BorderKind::SeparatingCurve;
  } else {
    throw ScenarioError("ground_truth_border.kind", "expected Polygon or SeparatingCurve");
  }

  const json& strokes = require(j, "strokes", "");
  if (!strokes.is_array()) throw ScenarioError("strokes", "expected a list");
  for (std::size_t i = 0; i < strokes.size(); ++i) {
    const std::string p = "strokes[" + std::to_string(i) + "].";
    ScriptedStroke s{polyline_from(require(strokes[i], "polyline", p), p + "polyline")};
    const json& purpose = require(strokes[i], "purpose", p);
    if (purpose == "Border") {
      s.purpose = StrokePurpose::Border;
    } else if (purpose == "Seed") {
      s.purpose = StrokePurpose::Seed;
    } else {
      throw ScenarioError(p + "purpose", "expected Border or Seed");
    }
    s.dwell = number_or(strokes[i], "dwell", 0.0, p);
    sc.strokes.push_back(std::move(s));
  }
  sc.stroke_speed = number_or(j, "stroke_speed", sc.stroke_speed, "");
  if (j.contains("params")) sc.params = params_from(j.at("params"), "params");
  if (j.contains("noise_sigma")) {
    const json& n = j.at("noise_sigma");
    if (!n.is_object()) throw ScenarioError("noise_sigma", "expected an object");
    for (const auto& [id, v] : n.items()) {
      if (!v.is_number()) throw ScenarioError("noise_sigma." + id, "expected a number");
      sc.noise_sigma[id] = v.get<double>();
    }
  }
  if (j.contains("robot")) {
    const json& r = j.at("robot");
    RobotConfig& c = sc.robot;
    c.v_max = number_or(r, "v_max", c.v_max, "robot.");
    c.angular_speed = number_or(r, "angular_speed", c.angular_speed, "robot.");
    c.inflation = number_or(r, "inflation", c.inflation, "robot.");
    c.follow_distance = number_or(r, "follow_distance", c.follow_distance, "robot.");
    c.replan_distance = number_or(r, "replan_distance", c.replan_distance, "robot.");
    c.camera_height = number_or(r, "camera_height", c.camera_height, "robot.");
    c.camera_pitch = number_or(r, "camera_pitch", c.camera_pitch, "robot.");
    c.camera_forward = number_or(r, "camera_forward", c.camera_forward, "robot.");
  }
  sc.switch_latency = number_or(j, "switch_latency", sc.switch_latency, "");
  sc.aim_time = number_or(j, "aim_time", sc.aim_time, "");
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("path", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("", std::string("malformed scenario file: ") + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("path", "cannot write " + path.string());
  out << scenario_to_json(sc).dump(2) << '\n';
}

Scenario resolve_scenario(const std::string& ref) {
  const std::string prefix = "builtin:";
  if (ref.rfind(prefix, 0) == 0) {
    const std::string n = ref.substr(prefix.size());
    if (n != "1" && n != "2" && n != "3") throw ScenarioError("scenario", "unknown builtin '" + ref + "'");
    return builtin_scenario(std::stoi(n));
  }
  return load_scenario(ref);
}

}  // namespace borderforge
