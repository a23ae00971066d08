#include "borderforge/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace borderforge {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

bool obstacle(Occupancy o) { return o != Occupancy::Free; }

struct OpenEntry {
  double f;
  double h;
  std::uint64_t order;
  std::size_t index;
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (h != o.h) return h > o.h;
    return order > o.order;
  }
};

}  // namespace

InflatedGrid::InflatedGrid(OccupancyGrid grid, double inflation)
    : grid_(std::move(grid)), inflation_(inflation), blocked_(grid_.cells().size(), 0) {
  if (inflation < 0.0 || !std::isfinite(inflation))
    throw PlanningError("inflation must be a nonnegative distance");
  const double radius_cells = inflation / grid_.resolution();
  const int reach = static_cast<int>(std::floor(radius_cells));
  const double limit = radius_cells * radius_cells + 1e-9;
  std::vector<CellIndex> disk;
  for (int dr = -reach; dr <= reach; ++dr)
    for (int dc = -reach; dc <= reach; ++dc)
      if (dc * dc + dr * dr <= limit) disk.push_back({dc, dr});

  const int w = grid_.width();
  const int h = grid_.height();
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!obstacle(grid_.at({col, row}))) continue;
      blocked_[grid_.index({col, row})] = 1;
      bool boundary = false;
      for (int dr = -1; dr <= 1 && !boundary; ++dr)
        for (int dc = -1; dc <= 1 && !boundary; ++dc) {
          const CellIndex nb{col + dc, row + dr};
          boundary = grid_.contains(nb) && !obstacle(grid_.at(nb));
        }
      if (!boundary) continue;
      for (const CellIndex& d : disk) {
        const CellIndex c{col + d.col, row + d.row};
        if (grid_.contains(c)) blocked_[grid_.index(c)] = 1;
      }
    }
  }
}

std::optional<Path> InflatedGrid::plan(Point2 start, Point2 goal) const {
  CellIndex s;
  CellIndex g;
  try {
    s = world_to_cell(grid_, start);
    g = world_to_cell(grid_, goal);
  } catch (const OutOfBoundsError& e) {
    throw PlanningError(std::string("plan endpoint out of bounds: ") + e.what());
  }
  if (blocked(s)) throw PlanningError("start lies inside an inflated obstacle");
  if (blocked(g)) throw PlanningError("goal lies inside an inflated obstacle");

  const double res = grid_.resolution();
  const auto heuristic = [&](CellIndex c) {
    const double dx = std::abs(c.col - g.col);
    const double dy = std::abs(c.row - g.row);
    return res * (std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy));
  };

  const std::size_t n = grid_.cells().size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n, kInf);
  std::vector<std::size_t> parent(n, n);
  std::vector<std::uint8_t> closed(n, 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  std::uint64_t order = 0;

  const std::size_t start_idx = grid_.index(s);
  const std::size_t goal_idx = grid_.index(g);
  cost[start_idx] = 0.0;
  open.push({heuristic(s), heuristic(s), order++, start_idx});

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (closed[top.index]) continue;
    closed[top.index] = 1;
    if (top.index == goal_idx) break;
    const CellIndex c = grid_.cell_of(top.index);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dc == 0 && dr == 0) continue;
        const CellIndex nb{c.col + dc, c.row + dr};
        if (!grid_.contains(nb) || blocked(nb)) continue;
        const bool diagonal = dc != 0 && dr != 0;
        if (diagonal && (blocked({c.col + dc, c.row}) || blocked({c.col, c.row + dr}))) continue;
        const std::size_t idx = grid_.index(nb);
        if (closed[idx]) continue;
        const double next = cost[top.index] + (diagonal ? kSqrt2 * res : res);
        if (next < cost[idx]) {
          cost[idx] = next;
          parent[idx] = top.index;
          const double hn = heuristic(nb);
          open.push({next + hn, hn, order++, idx});
        }
      }
    }
  }
  if (!closed[goal_idx]) return std::nullopt;

  Path path;
  for (std::size_t idx = goal_idx; idx != n; idx = parent[idx]) {
    path.cells.push_back(grid_.cell_of(idx));
    if (idx == start_idx) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  for (std::size_t i = 0; i < path.cells.size(); ++i) {
    path.waypoints.push_back(cell_to_world(grid_, path.cells[i]));
    if (i > 0) {
      const bool diagonal = path.cells[i].col != path.cells[i - 1].col &&
                            path.cells[i].row != path.cells[i - 1].row;
      path.length += diagonal ? kSqrt2 * res : res;
    }
  }
  return path;
}

std::optional<Point2> InflatedGrid::nearest_free(Point2 p, double max_radius) const {
  if (!grid_.in_bounds(p)) return std::nullopt;
  const CellIndex center = world_to_cell(grid_, p);
  if (!blocked(center)) return cell_to_world(grid_, center);
  const int reach = static_cast<int>(std::ceil(max_radius / grid_.resolution()));
  std::optional<Point2> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int dr = -reach; dr <= reach; ++dr) {
    for (int dc = -reach; dc <= reach; ++dc) {
      const CellIndex c{center.col + dc, center.row + dr};
      if (!grid_.contains(c) || blocked(c)) continue;
      const Point2 w = cell_to_world(grid_, c);
      const double d = distance(w, p);
      if (d <= max_radius && d < best_dist) {
        best = w;
        best_dist = d;
      }
    }
  }
  return best;
}

std::optional<Path> plan(const OccupancyGrid& grid, Point2 start, Point2 goal, double inflation) {
  return InflatedGrid(grid, inflation).plan(start, goal);
}

bool reachable(const OccupancyGrid& grid, Point2 start, Point2 goal, double inflation) {
  const InflatedGrid inflated(grid, inflation);
  try {
    if (inflated.blocked(world_to_cell(grid, goal))) return false;
  } catch (const OutOfBoundsError& e) {
    throw PlanningError(std::string("plan endpoint out of bounds: ") + e.what());
  }
  return inflated.plan(start, goal).has_value();
}

}  // namespace borderforge
