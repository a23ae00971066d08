#pragma once

#include "borderforge/geometry.hpp"
#include "borderforge/gridmap.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace borderforge {

/// Failure of one pipeline stage; `stage()` names it (clustering, polygon, seed).
class ExtractionError : public Error {
 public:
  ExtractionError(std::string stage, const std::string& what);
  [[nodiscard]] const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Tuning of the three extraction stages. Defaults are the published values;
/// `closure_dist` decides whether the chain's endpoints close a polygon.
struct ExtractionParams {
  double eps = 0.5;
  int min_pts = 1;
  double min_exp = 0.3;
  double max_exp = std::numeric_limits<double>::infinity();
  int min_size = 10;
  double thin_dist = 0.1;
  double poly_dist = 0.5;
  double closure_dist = 0.5;

  /// Throws ExtractionError("params", ...) on invalid values.
  void validate() const;
};

struct Cluster {
  std::vector<Point2> points;
  /// Input indices of `points`, ascending.
  std::vector<std::size_t> indices;
};

struct Clustering {
  std::vector<Cluster> clusters;
  std::vector<Point2> noise;
  std::vector<std::size_t> noise_indices;
};

/// DBSCAN where a core point has at least `min_pts` other points within `eps`.
/// Clusters are numbered by the input index of their first core point.
[[nodiscard]] Clustering dbscan(const std::vector<Point2>& points, double eps, int min_pts);

/// Largest cluster with at least `min_size` points whose bounding-box diagonal
/// lies strictly between `min_exp` and `max_exp`.
[[nodiscard]] std::optional<Cluster> select_border_cluster(const std::vector<Cluster>& clusters,
                                                           const ExtractionParams& params);

/// Thinning output plus the grouping that produced it.
struct ThinningResult {
  std::vector<Point2> points;
  /// For every merged output point (leading entries of `points`), the input indices it averages.
  std::vector<std::vector<std::size_t>> groups;
  /// Input indices of unmerged survivors, in the order they follow the means.
  std::vector<std::size_t> survivors;
};

/// Repeatedly replaces the point with the most neighbours within `thin_dist`,
/// together with those neighbours, by their mean.
[[nodiscard]] ThinningResult thin_detailed(const std::vector<Point2>& points, double thin_dist);
[[nodiscard]] std::vector<Point2> thin(const std::vector<Point2>& points, double thin_dist);

struct PolygonResult {
  Polyline chain;
  /// Input indices of the chain vertices, in chain order.
  std::vector<std::size_t> order;
  /// Points never reached by the chain growth.
  std::size_t dropped = 0;
};

/// Grows a chain from point 0 in two directions by nearest unmarked neighbours
/// within `poly_dist`, then joins reverse(first direction) with the second.
[[nodiscard]] PolygonResult generate_polygon_detailed(const std::vector<Point2>& points,
                                                      double poly_dist);
[[nodiscard]] Polyline generate_polygon(const std::vector<Point2>& points, double poly_dist);

/// Centroid of the largest DBSCAN cluster of the seed buffer.
[[nodiscard]] Point2 extract_seed(const std::vector<Point2>& points,
                                  const ExtractionParams& params);

/// Open chains whose endpoint gap is below this fraction of the chain length
/// can close a polygon; a straight stroke (gap == length) never does.
inline constexpr double kMaxClosureGapRatio = 0.5;

[[nodiscard]] BorderKind classify_chain(const Polyline& chain, const ExtractionParams& params);

struct ExtractionDiagnostics {
  std::size_t input_points = 0;
  std::size_t noise_points = 0;
  std::size_t cluster_count = 0;
  std::size_t border_cluster_size = 0;
  std::size_t thinned_points = 0;
  std::size_t dropped_points = 0;
};

struct ExtractionResult {
  VirtualBorder border;
  ExtractionDiagnostics diagnostics;
};

[[nodiscard]] ExtractionResult extract_border_detailed(const std::vector<Point2>& border_points,
                                                       const std::vector<Point2>& seed_points,
                                                       const ExtractionParams& params);
[[nodiscard]] VirtualBorder extract_border(const std::vector<Point2>& border_points,
                                           const std::vector<Point2>& seed_points,
                                           const ExtractionParams& params);

}  // namespace borderforge
