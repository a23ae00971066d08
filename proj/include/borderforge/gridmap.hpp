#pragma once

#include "borderforge/geometry.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace borderforge {

class MapError : public Error {
 public:
  using Error::Error;
};

/// Raised when a world coordinate falls outside the grid.
class OutOfBoundsError : public MapError {
 public:
  explicit OutOfBoundsError(Point2 p);
  [[nodiscard]] Point2 coordinate() const { return coordinate_; }

 private:
  Point2 coordinate_;
};

enum class Occupancy : std::uint8_t { Free, Occupied, Unknown };

[[nodiscard]] const char* to_string(Occupancy o);

struct CellIndex {
  int col = 0;
  int row = 0;
  friend bool operator==(CellIndex, CellIndex) = default;
  friend auto operator<=>(CellIndex, CellIndex) = default;
};

/// Trinary occupancy grid. Cell (0,0) has its lower-left corner at `origin`;
/// columns run along the origin's x axis, rows along its y axis.
class OccupancyGrid {
 public:
  OccupancyGrid(int width, int height, double resolution, Pose2 origin,
                Occupancy fill = Occupancy::Free);
  OccupancyGrid(int width, int height, double resolution, Pose2 origin,
                std::vector<Occupancy> cells);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] double resolution() const { return resolution_; }
  [[nodiscard]] const Pose2& origin() const { return origin_; }
  [[nodiscard]] const std::vector<Occupancy>& cells() const { return cells_; }

  [[nodiscard]] bool contains(CellIndex c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
  }
  [[nodiscard]] std::size_t index(CellIndex c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }
  [[nodiscard]] CellIndex cell_of(std::size_t idx) const {
    return {static_cast<int>(idx % static_cast<std::size_t>(width_)),
            static_cast<int>(idx / static_cast<std::size_t>(width_))};
  }
  [[nodiscard]] Occupancy at(CellIndex c) const { return cells_[index(c)]; }
  void set(CellIndex c, Occupancy o) { cells_[index(c)] = o; }

  /// Continuous position in cell units within the grid frame.
  [[nodiscard]] Point2 to_grid_frame(Point2 world) const;
  [[nodiscard]] bool in_bounds(Point2 world) const;

  [[nodiscard]] std::size_t count(Occupancy o) const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  int width_;
  int height_;
  double resolution_;
  Pose2 origin_;
  std::vector<Occupancy> cells_;
};

enum class BorderKind : std::uint8_t { Polygon, SeparatingCurve };

[[nodiscard]] const char* to_string(BorderKind k);

/// A user-defined restriction: chain of border points, a seed marking the
/// side to restrict, and the occupancy to write there.
struct VirtualBorder {
  Polyline chain;
  Point2 seed;
  double occupancy = 1.0;
  BorderKind kind = BorderKind::SeparatingCurve;
};

[[nodiscard]] CellIndex world_to_cell(const OccupancyGrid& grid, Point2 p);
/// World position of the cell centre.
[[nodiscard]] Point2 cell_to_world(const OccupancyGrid& grid, CellIndex c);

/// Every cell touched by the chain's segments, in traversal order without
/// duplicates. Consecutive cells are 8-neighbours.
[[nodiscard]] std::vector<CellIndex> rasterize_chain(const OccupancyGrid& grid,
                                                     const Polyline& chain);

/// Extends the first and last segments of an open chain until they meet
/// Occupied/Unknown cells or the map edge.
[[nodiscard]] Polyline extend_to_physical_borders(const OccupancyGrid& grid,
                                                  const Polyline& chain);

struct IntegrationOptions {
  /// Maximum number of cells the seed fill may claim.
  std::size_t fill_budget = std::numeric_limits<std::size_t>::max();
};

/// Writes a virtual border into a copy of `prior` and returns it.
[[nodiscard]] OccupancyGrid integrate_border(const OccupancyGrid& prior, const VirtualBorder& v,
                                             const IntegrationOptions& options = {});

/// Cells the integrated border would mark: the closed/extended chain raster.
[[nodiscard]] std::vector<CellIndex> border_cells(const OccupancyGrid& prior,
                                                  const VirtualBorder& v);

/// Jaccard index of the restriction areas of two posteriors, each taken as the
/// cells that are Occupied there but not in the shared prior.
[[nodiscard]] double jsi(const OccupancyGrid& prior, const OccupancyGrid& ground_truth,
                         const OccupancyGrid& user_defined);

/// Indices of cells Occupied in `posterior` but not in `prior`.
[[nodiscard]] std::vector<std::size_t> restriction_area(const OccupancyGrid& prior,
                                                        const OccupancyGrid& posterior);

/// Throws MapError unless both grids share dimensions, resolution and origin.
void require_same_frame(const OccupancyGrid& a, const OccupancyGrid& b);

}  // namespace borderforge
