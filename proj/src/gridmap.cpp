#include "borderforge/gridmap.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <unordered_set>

namespace borderforge {

namespace {

std::string format_point(Point2 p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

// Visits every cell a straight segment passes through (grid-frame coordinates
// in cell units). Exact lattice-corner crossings step diagonally.
void traverse_segment(Point2 a, Point2 b, const OccupancyGrid& grid,
                      std::vector<CellIndex>& out) {
  CellIndex cur{static_cast<int>(std::floor(a.x)), static_cast<int>(std::floor(a.y))};
  const CellIndex end{static_cast<int>(std::floor(b.x)), static_cast<int>(std::floor(b.y))};
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double delta_x = step_x != 0 ? 1.0 / std::abs(dx) : kInf;
  const double delta_y = step_y != 0 ? 1.0 / std::abs(dy) : kInf;
  double t_max_x = step_x > 0   ? (cur.col + 1 - a.x) / dx
                   : step_x < 0 ? (a.x - cur.col) / -dx
                                : kInf;
  double t_max_y = step_y > 0   ? (cur.row + 1 - a.y) / dy
                   : step_y < 0 ? (a.y - cur.row) / -dy
                                : kInf;

  out.push_back(cur);
  const int max_steps = std::abs(end.col - cur.col) + std::abs(end.row - cur.row) + 2;
  for (int i = 0; i < max_steps && cur != end; ++i) {
    constexpr double kTie = 1e-12;
    if (std::abs(t_max_x - t_max_y) <= kTie) {
      cur.col += step_x;
      cur.row += step_y;
      t_max_x += delta_x;
      t_max_y += delta_y;
    } else if (t_max_x < t_max_y) {
      cur.col += step_x;
      t_max_x += delta_x;
    } else {
      cur.row += step_y;
      t_max_y += delta_y;
    }
    if (!grid.contains(cur)) break;
    out.push_back(cur);
  }
  if (out.back() != end && grid.contains(end)) out.push_back(end);
}

Point2 unit(Point2 v) {
  const double n = v.norm();
  return v / n;
}

Point2 march_to_border(const OccupancyGrid& grid, Point2 from, Point2 dir) {
  const double step = grid.resolution() / 2.0;
  const int max_steps =
      static_cast<int>(std::hypot(grid.width(), grid.height()) * 2.0) + 4;
  Point2 last_free = from;
  for (int i = 1; i <= max_steps; ++i) {
    const Point2 q = from + dir * (step * i);
    if (!grid.in_bounds(q)) break;
    if (grid.at(world_to_cell(grid, q)) != Occupancy::Free) break;
    last_free = q;
  }
  return last_free;
}

}  // namespace

OutOfBoundsError::OutOfBoundsError(Point2 p)
    : MapError("coordinate " + format_point(p) + " is outside the map"), coordinate_(p) {}

const char* to_string(Occupancy o) {
  switch (o) {
    case Occupancy::Free: return "free";
    case Occupancy::Occupied: return "occupied";
    case Occupancy::Unknown: return "unknown";
  }
  return "?";
}

const char* to_string(BorderKind k) {
  return k == BorderKind::Polygon ? "polygon" : "separating_curve";
}

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Pose2 origin,
                             Occupancy fill)
    : OccupancyGrid(width, height, resolution, origin,
                    std::vector<Occupancy>(width > 0 && height > 0
                                               ? static_cast<std::size_t>(width) *
                                                     static_cast<std::size_t>(height)
                                               : 0,
                                           fill)) {}

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Pose2 origin,
                             std::vector<Occupancy> cells)
    : width_(width),
      height_(height),
      resolution_(resolution),
      origin_(origin),
      cells_(std::move(cells)) {
  if (width <= 0 || height <= 0) throw MapError("grid dimensions must be positive");
  if (!(resolution > 0.0) || !std::isfinite(resolution))
    throw MapError("grid resolution must be positive");
  if (cells_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw MapError("cell count does not match width*height");
}

Point2 OccupancyGrid::to_grid_frame(Point2 world) const {
  return origin_.inverse_transform(world) / resolution_;
}

bool OccupancyGrid::in_bounds(Point2 world) const {
  const Point2 g = to_grid_frame(world);
  return g.x >= 0.0 && g.y >= 0.0 && g.x < width_ && g.y < height_;
}

std::size_t OccupancyGrid::count(Occupancy o) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), o));
}

CellIndex world_to_cell(const OccupancyGrid& grid, Point2 p) {
  if (!p.finite() || !grid.in_bounds(p)) throw OutOfBoundsError(p);
  const Point2 g = grid.to_grid_frame(p);
  return {static_cast<int>(std::floor(g.x)), static_cast<int>(std::floor(g.y))};
}

Point2 cell_to_world(const OccupancyGrid& grid, CellIndex c) {
  const double r = grid.resolution();
  return grid.origin().transform({(c.col + 0.5) * r, (c.row + 0.5) * r});
}

std::vector<CellIndex> rasterize_chain(const OccupancyGrid& grid, const Polyline& chain) {
  for (const Point2& v : chain.vertices())
    if (!grid.in_bounds(v)) throw OutOfBoundsError(v);

  std::vector<CellIndex> raw;
  for (std::size_t i = 1; i < chain.size(); ++i)
    traverse_segment(grid.to_grid_frame(chain[i - 1]), grid.to_grid_frame(chain[i]), grid, raw);

  std::vector<CellIndex> out;
  std::unordered_set<std::size_t> seen;
  for (const CellIndex& c : raw)
    if (seen.insert(grid.index(c)).second) out.push_back(c);
  return out;
}

Polyline extend_to_physical_borders(const OccupancyGrid& grid, const Polyline& chain) {
  const std::size_t n = chain.size();
  const Point2 first_dir = chain[0] - chain[1];
  const Point2 last_dir = chain[n - 1] - chain[n - 2];
  if (first_dir.norm() == 0.0 || last_dir.norm() == 0.0)
    throw MapError("cannot extend a zero-length end segment");

  const Point2 new_front = march_to_border(grid, chain.front(), unit(first_dir));
  const Point2 new_back = march_to_border(grid, chain.back(), unit(last_dir));

  std::vector<Point2> out;
  out.reserve(n + 2);
  if (distance(new_front, chain.front()) > 1e-12) out.push_back(new_front);
  out.insert(out.end(), chain.vertices().begin(), chain.vertices().end());
  if (distance(new_back, chain.back()) > 1e-12) out.push_back(new_back);
  return Polyline(std::move(out));
}

std::vector<CellIndex> border_cells(const OccupancyGrid& prior, const VirtualBorder& v) {
  if (v.kind == BorderKind::SeparatingCurve)
    return rasterize_chain(prior, extend_to_physical_borders(prior, v.chain));
  if (v.chain.front() == v.chain.back()) return rasterize_chain(prior, v.chain);
  std::vector<Point2> ring = v.chain.vertices();
  ring.push_back(ring.front());
  return rasterize_chain(prior, Polyline(std::move(ring)));
}

OccupancyGrid integrate_border(const OccupancyGrid& prior, const VirtualBorder& v,
                               const IntegrationOptions& options) {
  if (v.occupancy != 1.0) throw MapError("only occupancy 1.0 is supported");
  const CellIndex seed = world_to_cell(prior, v.seed);
  const std::vector<CellIndex> border = border_cells(prior, v);

  if (std::find(border.begin(), border.end(), seed) != border.end())
    throw MapError("seed " + format_point(v.seed) + " lies on the border");

  const Occupancy seed_state = prior.at(seed);
  if (seed_state == Occupancy::Occupied) {
    // Re-applying an already integrated border is a no-op.
    const bool applied = std::all_of(border.begin(), border.end(), [&](CellIndex c) {
      return prior.at(c) == Occupancy::Occupied;
    });
    if (applied) return prior;
  }
  if (seed_state != Occupancy::Free)
    throw MapError(std::string("seed ") + format_point(v.seed) + " lies in a " +
                   to_string(seed_state) + " cell");

  OccupancyGrid posterior = prior;
  for (const CellIndex& c : border) posterior.set(c, Occupancy::Occupied);

  // 4-connected fill of free cells from the seed.
  std::vector<std::size_t> region;
  std::vector<std::uint8_t> visited(posterior.cells().size(), 0);
  std::deque<CellIndex> queue{seed};
  visited[posterior.index(seed)] = 1;
  while (!queue.empty()) {
    const CellIndex c = queue.front();
    queue.pop_front();
    region.push_back(posterior.index(c));
    if (region.size() > options.fill_budget)
      throw MapError("seed fill exceeds the budget of " + std::to_string(options.fill_budget) +
                     " cells");
    constexpr CellIndex kNeighbours[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const CellIndex& d : kNeighbours) {
      const CellIndex nb{c.col + d.col, c.row + d.row};
      if (!posterior.contains(nb)) continue;
      const std::size_t idx = posterior.index(nb);
      if (visited[idx] || posterior.cells()[idx] != Occupancy::Free) continue;
      visited[idx] = 1;
      queue.push_back(nb);
    }
  }
  for (std::size_t idx : region) posterior.set(posterior.cell_of(idx), Occupancy::Occupied);
  return posterior;
}

void require_same_frame(const OccupancyGrid& a, const OccupancyGrid& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw MapError("grid dimensions differ");
  if (a.resolution() != b.resolution()) throw MapError("grid resolutions differ");
  if (!(a.origin() == b.origin())) throw MapError("grid origins differ");
}

std::vector<std::size_t> restriction_area(const OccupancyGrid& prior,
                                          const OccupancyGrid& posterior) {
  require_same_frame(prior, posterior);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < prior.cells().size(); ++i)
    if (posterior.cells()[i] == Occupancy::Occupied && prior.cells()[i] != Occupancy::Occupied)
      out.push_back(i);
  return out;
}

double jsi(const OccupancyGrid& prior, const OccupancyGrid& ground_truth,
           const OccupancyGrid& user_defined) {
  require_same_frame(prior, ground_truth);
  require_same_frame(prior, user_defined);
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t i = 0; i < prior.cells().size(); ++i) {
    if (prior.cells()[i] == Occupancy::Occupied) continue;
    const bool in_gt = ground_truth.cells()[i] == Occupancy::Occupied;
    const bool in_ud = user_defined.cells()[i] == Occupancy::Occupied;
    both += (in_gt && in_ud) ? 1 : 0;
    either += (in_gt || in_ud) ? 1 : 0;
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace borderforge
