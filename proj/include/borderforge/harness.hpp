#pragma once

#include "borderforge/interaction.hpp"
#include "borderforge/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace borderforge {

struct RunOptions {
  /// Simulation step; also the spot sampling period (25 Hz).
  double dt = 0.04;
  /// How far ahead of the robot the user points while guiding.
  double guide_lookahead = 0.8;
  /// A spot that stays undetected this long aborts the run.
  double stall_timeout = 20.0;
  /// Guiding aborts after this multiple of the kinematic guide time.
  double guide_timeout_factor = 4.0;
};

struct RunReport {
  std::string scenario;
  InteractionMode mode = InteractionMode::NRS;
  std::uint64_t seed = 0;
  bool success = false;
  std::string reason;
  double jsi = 0.0;
  TimingReport timing;
  std::size_t border_points = 0;
  std::size_t seed_points = 0;
  std::size_t dropped_points = 0;
  /// Summed shortest paths of all guided legs (RobotOnly only): start to guide goal,
  /// plus a seed viewpoint leg when turning alone cannot bring the seed into view.
  double guide_path_length = 0.0;
  /// Time an ideal robot needs for those paths plus the turn at the end of each leg.
  double guide_kinematic_time = 0.0;
  std::string border_kind;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct RunArtifacts {
  RunReport report;
  OccupancyGrid prior;
  OccupancyGrid ground_truth;
  std::optional<OccupancyGrid> posterior;
  std::vector<Event> events;
};

/// Replays the scenario's scripted user against an InteractionSession.
[[nodiscard]] RunArtifacts run_scenario_detailed(const Scenario& sc, InteractionMode mode,
                                                 std::uint64_t seed, const RunOptions& options = {});
[[nodiscard]] RunReport run_scenario(const Scenario& sc, InteractionMode mode, std::uint64_t seed,
                                     const RunOptions& options = {});

[[nodiscard]] nlohmann::json to_json(const RunReport& r);

/// Writes report.json, events.jsonl and the prior, ground_truth and posterior maps (PGM + YAML) into `dir`.
void write_run(const RunArtifacts& run, const std::filesystem::path& dir);

struct Summary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct BatchRow {
  std::string scenario;
  InteractionMode mode = InteractionMode::NRS;
  std::size_t runs = 0;
  double success_rate = 0.0;
  Summary guide;
  Summary border;
  Summary seed;
  Summary total;
  double jsi_median = 0.0;
  /// RobotOnly mean total over NRS mean total for the scenario; NaN when a mode is missing.
  double speedup = 0.0;
};

struct BatchReport {
  std::vector<RunReport> runs;
  std::vector<BatchRow> rows;
};

/// Runs every scenario x mode x seed combination on `threads` workers (0 = hardware concurrency).
[[nodiscard]] BatchReport batch_report(const std::vector<Scenario>& scenarios,
                                       const std::vector<InteractionMode>& modes,
                                       const std::vector<std::uint64_t>& seeds,
                                       unsigned threads = 0, const RunOptions& options = {});

[[nodiscard]] std::string to_csv(const BatchReport& b);
[[nodiscard]] nlohmann::json to_json(const BatchReport& b);
[[nodiscard]] double median(std::vector<double> values);

}  // namespace borderforge
