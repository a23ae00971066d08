#include "borderforge/harness.hpp"

#include "borderforge/map_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace borderforge {

namespace {

class RunFailure : public Error {
 public:
  using Error::Error;
};

/// Arc-length parametrised copy of a planned route.
struct Route {
  std::vector<Point2> points;
  std::vector<double> cum;

  explicit Route(std::vector<Point2> pts) : points(std::move(pts)), cum(points.size(), 0.0) {
    for (std::size_t i = 1; i < points.size(); ++i)
      cum[i] = cum[i - 1] + distance(points[i - 1], points[i]);
  }
  [[nodiscard]] double length() const { return cum.empty() ? 0.0 : cum.back(); }
  [[nodiscard]] Point2 at(double s) const {
    if (s <= 0.0) return points.front();
    if (s >= length()) return points.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - cum.begin());
    const double t = (s - cum[i - 1]) / (cum[i] - cum[i - 1]);
    return points[i - 1] + (points[i] - points[i - 1]) * t;
  }
};

constexpr int kViewpoints = 16;
/// Any resting pose this close to a seed viewpoint is good enough to turn and look.
constexpr double kViewpointTolerance = 0.35;

double bearing(Point2 from, Point2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

class Script {
 public:
  Script(const Scenario& sc, InteractionMode mode, std::uint64_t seed, const RunOptions& options,
         const OccupancyGrid& prior)
      : sc_(sc),
        options_(options),
        world_(sc.world()),
        session_(session_config(sc, prior, mode)),
        base_seed_(splitmix64(seed)) {}

  InteractionSession& session() { return session_; }

  /// Drives the robot to the guide goal by pointing ahead of it along the
  /// shortest route, which is extended past the goal by the guide standoff.
  void guide(const Route& route, double kinematic_time) {
    session_.handle_command(Command::GuideRobot);
    const Point2 goal = route.points.back();
    // The robot ignores spot moves below the replan distance, so it may rest that far off.
    const double arrival = sc_.robot.replan_distance + sc_.resolution;
    follow(route, options_.guide_timeout_factor * kinematic_time + 10.0, [&] {
      return distance(session_.robot().pose().position, goal) <= arrival &&
             !session_.robot().current_path();
    });
    const Point2 start = first_stroke(StrokePurpose::Border).polyline.front();
    if (!robot_sees(start)) turn_toward(start);
    if (!robot_sees(start)) throw RunFailure("stroke start not visible after guiding");
  }

  void define_border() {
    session_.handle_command(Command::DefineBorder);
    for (const ScriptedStroke& s : sc_.strokes) {
      if (s.purpose != StrokePurpose::Border) continue;
      hold(s.polyline.front(), sc_.aim_time);
      trace(s.polyline);
    }
  }

  void define_seed() {
    for (const ScriptedStroke& s : sc_.strokes) {
      if (s.purpose != StrokePurpose::Seed) continue;
      const Point2 target = s.polyline.front();
      session_.handle_command(Command::DefineSeed);
      if (session_.mode() == InteractionMode::RobotOnly && !bring_into_view(target)) {
        guide_to_viewpoint(target);
        session_.handle_command(Command::DefineSeed);
      }
      wait(sc_.aim_time);
      dwell(s);
    }
  }

  /// Path length and ideal time of guiding legs beyond the first.
  [[nodiscard]] double extra_guide_length() const { return extra_length_; }
  [[nodiscard]] double extra_guide_time() const { return extra_time_; }

  void save() {
    for (const Event& e : session_.handle_command(Command::Save))
      if (e.kind == EventKind::Error)
        throw RunFailure(e.payload.value("stage", std::string("save")) + ": " +
                         e.payload.value("message", std::string()));
  }

 private:
  const ScriptedStroke& first_stroke(StrokePurpose p) const {
    for (const ScriptedStroke& s : sc_.strokes)
      if (s.purpose == p) return s;
    throw RunFailure("scenario has no stroke of that purpose");
  }

  /// Lets the robot settle and turns it towards `p`; false when `p` stays hidden.
  bool bring_into_view(Point2 p) {
    settle();
    if (robot_sees(p)) return true;
    turn_toward(p);
    return robot_sees(p);
  }

  /// Guides the robot to the quickest free viewpoint at the follow distance from `p`, then turns to it.
  void guide_to_viewpoint(Point2 p) {
    const InflatedGrid nav(session_.working_map(), sc_.robot.inflation);
    const std::optional<Point2> from = nav.nearest_free(session_.robot().pose().position, 0.5);
    if (!from) throw RunFailure("robot is stuck");
    const double heading = session_.robot().pose().theta;
    std::optional<Path> best;
    double best_time = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kViewpoints; ++i) {
      const double a = 2.0 * std::numbers::pi * i / kViewpoints;
      const Point2 view = p + Point2{std::cos(a), std::sin(a)} * sc_.robot.follow_distance;
      if (!nav.grid().in_bounds(view) || nav.blocked(world_to_cell(nav.grid(), view))) continue;
      std::optional<Path> path = nav.plan(*from, view);
      if (!path || path->waypoints.size() < 2) continue;
      const double t = ideal_leg_time(heading, *path, p);
      if (t < best_time) {
        best_time = t;
        best = std::move(path);
      }
    }
    if (!best) throw RunFailure("no viewpoint for the seed");

    const std::vector<Point2>& w = best->waypoints;
    extra_length_ += best->length;
    extra_time_ += sc_.switch_latency + best_time;

    session_.handle_command(Command::GuideRobot);
    const Point2 goal = w.back();
    const double limit = options_.guide_timeout_factor * best->length / sc_.robot.v_max + 10.0;
    follow(Route(w), limit, [&] {
      return distance(session_.robot().pose().position, goal) <= kViewpointTolerance &&
             !session_.robot().current_path();
    });
    turn_toward(p);
    if (!robot_sees(p)) throw RunFailure("seed not visible from the viewpoint");
  }

  /// Turn onto the path, drive it, then turn to face `look_at`.
  [[nodiscard]] double ideal_leg_time(double heading, const Path& path, Point2 look_at) const {
    const std::vector<Point2>& w = path.waypoints;
    const double out = bearing(w[0], w[1]);
    const double in = bearing(w[w.size() - 2], w.back());
    const double turns = std::abs(normalize_angle(out - heading)) +
                         std::abs(normalize_angle(bearing(w.back(), look_at) - in));
    return path.length / sc_.robot.v_max + turns / sc_.robot.angular_speed;
  }

  /// Points ahead of the robot along `route` until `done()` holds.
  template <class Done>
  void follow(const Route& route, double limit, Done done) {
    const Point2 goal = route.points.back();
    const double standoff = sc_.robot.guide_distance;
    const std::size_t n = route.points.size();
    const Point2 last_dir =
        n >= 2 ? (goal - route.points[n - 2]) / distance(goal, route.points[n - 2])
               : Point2{std::cos(session_.robot().pose().theta), std::sin(session_.robot().pose().theta)};
    const auto aim = [&](double s) {
      return s <= route.length() ? route.at(s)
                                 : goal + last_dir * std::min(s - route.length(), standoff);
    };
    std::size_t k = 0;
    double elapsed = 0.0;
    while (!done()) {
      if (elapsed > limit) throw RunFailure("guide timed out");
      const Point2 here = session_.robot().pose().position;
      const std::size_t window = std::min(n, k + 80);
      for (std::size_t i = k; i < window; ++i)
        if (distance(route.points[i], here) < distance(route.points[k], here)) k = i;
      std::optional<Point2> spot;
      // A robot resting short of the goal is pulled onto it by pointing just past it.
      const Point2 to_goal = goal - here;
      if (!session_.robot().current_path() && route.length() - route.cum[k] < options_.guide_lookahead &&
          to_goal.norm() > 1e-6) {
        const Point2 carrot = goal + to_goal / to_goal.norm() * standoff;
        if (robot_sees(carrot)) spot = carrot;
      }
      for (double ahead : {options_.guide_lookahead, 0.6, standoff}) {
        if (spot) break;
        const Point2 carrot = aim(route.cum[k] + std::max(ahead, standoff));
        if (robot_sees(carrot)) {
          spot = carrot;
          break;
        }
      }
      if (!spot && session_.robot().idle())
        session_.face_robot_toward(aim(route.cum[k] + options_.guide_lookahead));
      step(spot);
      elapsed += options_.dt;
    }
  }

  void step(std::optional<Point2> spot) {
    if (spot)
      session_.on_laser_spot(*spot, session_.sim_time(), splitmix64(base_seed_ + frame_));
    session_.tick(options_.dt);
    ++frame_;
  }

  /// Keeps the spot on `p` while the user settles the pointer.
  void hold(Point2 p, double seconds) {
    const long n = std::lround(seconds / options_.dt);
    for (long i = 0; i < n; ++i) step(p);
  }

  void wait(double seconds) {
    const long n = std::lround(seconds / options_.dt);
    for (long i = 0; i < n; ++i) step(std::nullopt);
  }

  bool robot_sees(Point2 p) const { return camera_sees(world_, session_.robot().camera(), p); }

  /// Waits for the robot to finish its current motion.
  void settle() {
    const double limit = options_.stall_timeout;
    for (double t = 0.0; t < limit && !session_.robot().idle(); t += options_.dt) step(std::nullopt);
  }

  void turn_toward(Point2 p) {
    session_.face_robot_toward(p);
    const double limit = 2.0 * std::numbers::pi / sc_.robot.angular_speed + 1.0;
    for (double t = 0.0; t < limit && !session_.robot().idle(); t += options_.dt) step(std::nullopt);
  }

  /// Moves the spot along the stroke while it is detected; an undetected spot
  /// is pulled back to the last detected position until the system catches up.
  void trace(const Polyline& stroke) {
    const double length = polyline_length(stroke);
    const double advance = sc_.stroke_speed * options_.dt;
    double s = 0.0;
    double last_ok = 0.0;
    double stalled = 0.0;
    while (true) {
      step(stroke.point_at(s));
      if (session_.last_detection_count() > 0) {
        last_ok = s;
        stalled = 0.0;
        if (s >= length) break;
        s = std::min(length, s + advance);
      } else {
        stalled += options_.dt;
        if (stalled > options_.stall_timeout) throw RunFailure("border spot lost");
        s = last_ok;
      }
    }
  }

  void dwell(const ScriptedStroke& stroke) {
    const double length = polyline_length(stroke.polyline);
    double s = 0.0;
    double elapsed = 0.0;
    while (elapsed < stroke.dwell ||
           (session_.seed_buffer().empty() && elapsed < stroke.dwell + options_.stall_timeout)) {
      step(stroke.polyline.point_at(std::fmod(s, length)));
      s += sc_.stroke_speed * options_.dt;
      elapsed += options_.dt;
    }
    if (session_.seed_buffer().empty()) throw RunFailure("seed spot never detected");
  }

  const Scenario& sc_;
  RunOptions options_;
  World world_;
  InteractionSession session_;
  std::uint64_t base_seed_;
  std::uint64_t frame_ = 0;
  double extra_length_ = 0.0;
  double extra_time_ = 0.0;
};

std::string number_text(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

Summary summarize(const std::vector<double>& v) {
  if (v.empty()) return {};
  Summary s{0.0, v.front(), v.front()};
  for (double x : v) {
    s.mean += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean /= static_cast<double>(v.size());
  return s;
}

nlohmann::json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"min", s.min}, {"max", s.max}};
}

}  // namespace

RunArtifacts run_scenario_detailed(const Scenario& sc, InteractionMode mode, std::uint64_t seed,
                                   const RunOptions& options) {
  sc.validate();
  const OccupancyGrid prior = build_prior(sc);
  RunArtifacts out{{}, prior, ground_truth_map(sc, prior), std::nullopt, {}};
  RunReport& report = out.report;
  report.scenario = sc.name;
  report.mode = mode;
  report.seed = seed;

  Script script(sc, mode, seed, options, prior);
  InteractionSession& session = script.session();
  try {
    if (mode == InteractionMode::RobotOnly) {
      const InflatedGrid nav(prior, sc.robot.inflation);
      const std::optional<Path> path = nav.plan(sc.robot_start.position, sc.guide_goal.position);
      if (!path) throw RunFailure("guide goal unreachable");
      std::vector<Point2> pts = path->waypoints;
      if (pts.size() < 2) pts.insert(pts.begin(), sc.robot_start.position);
      const Route route(std::move(pts));
      report.guide_path_length = path->length;

      const double arrival = route.points.size() >= 2
                                 ? bearing(route.points[route.points.size() - 2], route.points.back())
                                 : sc.robot_start.theta;
      RobotSim ideal(Pose2(route.points.back(), arrival), sc.robot_config());
      double turn = 0.0;
      Point2 stroke_start;
      for (const ScriptedStroke& s : sc.strokes)
        if (s.purpose == StrokePurpose::Border) {
          stroke_start = s.polyline.front();
          break;
        }
      if (!camera_sees(sc.world(), ideal.camera(), stroke_start))
        turn = std::abs(normalize_angle(bearing(route.points.back(), stroke_start) - arrival));
      report.guide_kinematic_time = path->length / sc.robot.v_max + turn / sc.robot.angular_speed;
      script.guide(route, report.guide_kinematic_time);
    }
    script.define_border();
    script.define_seed();
    report.guide_path_length += script.extra_guide_length();
    report.guide_kinematic_time += script.extra_guide_time();
    report.border_points = session.border_buffer().size();
    report.seed_points = session.seed_buffer().size();
    script.save();

    out.posterior = session.posterior();
    report.success = true;
    report.jsi = jsi(prior, out.ground_truth, *out.posterior);
    report.timing = session.timing_report();
    const ExtractionResult& ex = *session.last_extraction();
    report.dropped_points = ex.diagnostics.dropped_points;
    report.border_kind = to_string(ex.border.kind);
  } catch (const Error& e) {
    report.success = false;
    report.reason = e.what();
    if (!session.finished()) session.handle_command(Command::Cancel);
    report.timing = session.timing_report();
  }
  out.events = session.events();
  return out;
}

RunReport run_scenario(const Scenario& sc, InteractionMode mode, std::uint64_t seed,
                       const RunOptions& options) {
  return run_scenario_detailed(sc, mode, seed, options).report;
}

nlohmann::json to_json(const RunReport& r) {
  return {{"scenario", r.scenario},
          {"mode", to_string(r.mode)},
          {"seed", r.seed},
          {"success", r.success},
          {"reason", r.reason},
          {"jsi", r.jsi},
          {"timing",
           {{"guide", r.timing.guide},
            {"border", r.timing.border},
            {"seed", r.timing.seed},
            {"total", r.timing.total}}},
          {"points_collected", {{"border", r.border_points}, {"seed", r.seed_points}}},
          {"dropped_points", r.dropped_points},
          {"guide_path_length", r.guide_path_length},
          {"guide_kinematic_time", r.guide_kinematic_time},
          {"border_kind", r.border_kind}};
}

void write_run(const RunArtifacts& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << to_json(run.report).dump(2) << '\n';
  std::ofstream events(dir / "events.jsonl");
  for (const Event& e : run.events) events << to_line(e) << '\n';
  save_map(run.prior, dir / "prior");
  save_map(run.ground_truth, dir / "ground_truth");
  if (run.posterior) save_map(*run.posterior, dir / "posterior");
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

BatchReport batch_report(const std::vector<Scenario>& scenarios,
                         const std::vector<InteractionMode>& modes,
                         const std::vector<std::uint64_t>& seeds, unsigned threads,
                         const RunOptions& options) {
  struct Task {
    std::size_t scenario;
    InteractionMode mode;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    for (InteractionMode m : modes)
      for (std::uint64_t seed : seeds) tasks.push_back({s, m, seed});

  BatchReport out;
  out.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
      out.runs[i] = run_scenario(scenarios[tasks[i].scenario], tasks[i].mode, tasks[i].seed, options);
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (const Scenario& sc : scenarios) {
    for (InteractionMode m : modes) {
      BatchRow row;
      row.scenario = sc.name;
      row.mode = m;
      std::vector<double> guide, border, seed, total, jsis;
      std::size_t ok = 0;
      for (const RunReport& r : out.runs) {
        if (r.scenario != sc.name || r.mode != m) continue;
        ++row.runs;
        guide.push_back(r.timing.guide);
        border.push_back(r.timing.border);
        seed.push_back(r.timing.seed);
        total.push_back(r.timing.total);
        if (r.success) {
          ++ok;
          jsis.push_back(r.jsi);
        }
      }
      row.success_rate = row.runs == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(row.runs);
      row.guide = summarize(guide);
      row.border = summarize(border);
      row.seed = summarize(seed);
      row.total = summarize(total);
      row.jsi_median = median(jsis);
      out.rows.push_back(row);
    }
  }
  for (BatchRow& row : out.rows) {
    const BatchRow* robot = nullptr;
    const BatchRow* nrs = nullptr;
    for (const BatchRow& other : out.rows) {
      if (other.scenario != row.scenario) continue;
      (other.mode == InteractionMode::RobotOnly ? robot : nrs) = &other;
    }
    row.speedup = robot && nrs && nrs->total.mean > 0.0 ? robot->total.mean / nrs->total.mean
                                                       : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::string to_csv(const BatchReport& b) {
  std::ostringstream out;
  out << "scenario,mode,runs,success_rate";
  for (const char* part : {"guide", "border", "seed", "total"})
    out << ',' << part << "_mean," << part << "_min," << part << "_max";
  out << ",jsi_median,speedup\n";
  for (const BatchRow& r : b.rows) {
    out << r.scenario << ',' << to_string(r.mode) << ',' << r.runs << ','
        << number_text(r.success_rate);
    for (const Summary* s : {&r.guide, &r.border, &r.seed, &r.total})
      out << ',' << number_text(s->mean) << ',' << number_text(s->min) << ',' << number_text(s->max);
    out << ',' << number_text(r.jsi_median) << ',' << number_text(r.speedup) << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const BatchReport& b) {
  nlohmann::json rows = nlohmann::json::array();
  const auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  for (const BatchRow& r : b.rows)
    rows.push_back({{"scenario", r.scenario},
                    {"mode", to_string(r.mode)},
                    {"runs", r.runs},
                    {"success_rate", r.success_rate},
                    {"guide", summary_json(r.guide)},
                    {"border", summary_json(r.border)},
                    {"seed", summary_json(r.seed)},
                    {"total", summary_json(r.total)},
                    {"jsi_median", num(r.jsi_median)},
                    {"speedup", num(r.speedup)}});
  nlohmann::json runs = nlohmann::json::array();
  for (const RunReport& r : b.runs) runs.push_back(to_json(r));
  return {{"rows", rows}, {"runs", runs}};
}

}  // namespace borderforge
