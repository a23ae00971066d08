#pragma once

#include "borderforge/gridmap.hpp"

#include <optional>
#include <vector>

namespace borderforge {

class PlanningError : public Error {
 public:
  using Error::Error;
};

/// Robot footprint radius of a TurtleBot2-sized base.
inline constexpr double kDefaultInflation = 0.18;

struct Path {
  std::vector<Point2> waypoints;
  std::vector<CellIndex> cells;
  double length = 0.0;
};

/// Grid with obstacles grown by the robot radius, reusable for many queries.
class InflatedGrid {
 public:
  InflatedGrid(OccupancyGrid grid, double inflation);

  [[nodiscard]] const OccupancyGrid& grid() const { return grid_; }
  [[nodiscard]] double inflation() const { return inflation_; }
  /// Occupied, Unknown, or within `inflation` (centre to centre) of such a cell.
  [[nodiscard]] bool blocked(CellIndex c) const { return blocked_[grid_.index(c)] != 0; }
  [[nodiscard]] const std::vector<std::uint8_t>& blocked_mask() const { return blocked_; }

  /// Octile-optimal A* path between cell centres; nullopt when unreachable.
  /// Throws PlanningError when start or goal are outside the map or blocked.
  [[nodiscard]] std::optional<Path> plan(Point2 start, Point2 goal) const;

  /// Nearest unblocked cell centre to `p` within `max_radius`, by breadth-first ring search.
  [[nodiscard]] std::optional<Point2> nearest_free(Point2 p, double max_radius) const;

 private:
  OccupancyGrid grid_;
  double inflation_;
  std::vector<std::uint8_t> blocked_;
};

[[nodiscard]] std::optional<Path> plan(const OccupancyGrid& grid, Point2 start, Point2 goal,
                                       double inflation = kDefaultInflation);

/// Whether a path exists. A goal that lies inside an (inflated) obstacle is
/// reported unreachable; out-of-map points and a blocked start still throw.
[[nodiscard]] bool reachable(const OccupancyGrid& grid, Point2 start, Point2 goal,
                             double inflation = kDefaultInflation);

}  // namespace borderforge
