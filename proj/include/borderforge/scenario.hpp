#pragma once

#include "borderforge/extraction.hpp"
#include "borderforge/gridmap.hpp"
#include "borderforge/interaction.hpp"
#include "borderforge/perception.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace borderforge {

/// Invalid scenario content; `field()` is the offending key path.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, const std::string& what);
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class StrokePurpose : std::uint8_t { Border, Seed };

[[nodiscard]] const char* to_string(StrokePurpose p);

/// One laser gesture of the scripted user. Seed strokes are traced back and
/// forth for `dwell` seconds.
struct ScriptedStroke {
  Polyline polyline;
  StrokePurpose purpose = StrokePurpose::Border;
  double dwell = 0.0;
};

struct Scenario {
  std::string name;
  double width = 0.0;
  double height = 0.0;
  double resolution = 0.025;
  std::vector<WallSegment> walls;
  /// YAML map file; when absent the prior is rasterised from `walls`.
  std::optional<std::filesystem::path> prior_map;
  std::vector<CameraModel> cameras;
  Pose2 robot_start;
  /// Pose where the scripted user stops guiding the robot in RobotOnly runs.
  Pose2 guide_goal;
  VirtualBorder ground_truth_border{Polyline({{0.0, 0.0}, {1.0, 0.0}}), {}};
  std::vector<ScriptedStroke> strokes;
  double stroke_speed = 0.4;
  ExtractionParams params;
  /// Detection noise per camera id; "robot" is the on-board camera. Missing ids keep the default.
  std::map<std::string, double> noise_sigma;
  RobotConfig robot;
  double switch_latency = 3.0;
  /// Time the scripted user takes to place the spot before tracing.
  double aim_time = 2.0;

  [[nodiscard]] World world() const;
  /// Cameras with `noise_sigma` applied.
  [[nodiscard]] std::vector<CameraModel> stationary_cameras() const;
  [[nodiscard]] RobotConfig robot_config() const;
  /// Throws ScenarioError naming the first invalid field.
  void validate() const;
};

/// Grid of Free cells with every cell whose centre lies inside a wall rectangle marked Occupied.
[[nodiscard]] OccupancyGrid rasterize_walls(double width, double height, double resolution,
                                            const std::vector<WallSegment>& walls);

[[nodiscard]] OccupancyGrid build_prior(const Scenario& sc);
[[nodiscard]] OccupancyGrid ground_truth_map(const Scenario& sc, const OccupancyGrid& prior);
/// Session configuration for one run of `sc`.
[[nodiscard]] SessionConfig session_config(const Scenario& sc, const OccupancyGrid& prior,
                                           InteractionMode mode);

/// Copy of `sc` with every noise sigma multiplied by `factor` (0 disables noise).
[[nodiscard]] Scenario scale_noise(Scenario sc, double factor);

/// The three evaluation scenarios in the shared 8 m x 5 m lab.
[[nodiscard]] std::vector<Scenario> builtin_scenarios();
/// `index` in 1..3.
[[nodiscard]] Scenario builtin_scenario(int index);

[[nodiscard]] nlohmann::json scenario_to_json(const Scenario& sc);
[[nodiscard]] nlohmann::json params_to_json(const ExtractionParams& p);
/// Missing keys keep their defaults; throws ScenarioError on wrong types or invalid values.
[[nodiscard]] ExtractionParams params_from_json(const nlohmann::json& j);
/// Relative `prior_map` paths resolve against `base_dir`.
[[nodiscard]] Scenario scenario_from_json(const nlohmann::json& j,
                                          const std::filesystem::path& base_dir = {});
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& sc, const std::filesystem::path& path);
/// "builtin:N" or a scenario file path.
[[nodiscard]] Scenario resolve_scenario(const std::string& ref);

}  // namespace borderforge
