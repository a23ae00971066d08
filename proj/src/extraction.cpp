#include "borderforge/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace borderforge {

namespace {

// Uniform-grid bucket index for fixed-radius neighbour queries.
class NeighborIndex {
 public:
  NeighborIndex(const std::vector<Point2>& points, double radius)
      : points_(points), radius_(radius), cell_(radius > 0 ? radius : 1.0) {
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[key(bucket(points[i]))].push_back(i);
  }

  /// Indices within `radius` of point `i` (excluding i), ascending.
  std::vector<std::size_t> neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    const auto [bx, by] = bucket(points_[i]);
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        const auto it = buckets_.find(key({bx + dx, by + dy}));
        if (it == buckets_.end()) continue;
        for (std::size_t j : it->second)
          if (j != i && distance(points_[i], points_[j]) <= radius_) out.push_back(j);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::pair<long, long> bucket(Point2 p) const {
    return {static_cast<long>(std::floor(p.x / cell_)), static_cast<long>(std::floor(p.y / cell_))};
  }
  static std::uint64_t key(std::pair<long, long> b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(b.first)) << 32) |
           static_cast<std::uint32_t>(b.second);
  }

  const std::vector<Point2>& points_;
  double radius_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

constexpr int kUnvisited = -2;
constexpr int kNoise = -1;

}  // namespace

ExtractionError::ExtractionError(std::string stage, const std::string& what)
    : Error(stage + ": " + what), stage_(std::move(stage)) {}

void ExtractionParams::validate() const {
  const auto positive = [](double v) { return v > 0.0 && !std::isnan(v); };
  if (!positive(eps) || !positive(thin_dist) || !positive(poly_dist) || !positive(closure_dist) ||
      !positive(min_exp) || !positive(max_exp))
    throw ExtractionError("params", "all distances must be positive");
  if (min_pts < 1) throw ExtractionError("params", "min_pts must be at least 1");
  if (min_size < 0) throw ExtractionError("params", "min_size must be nonnegative");
  if (!(min_exp < max_exp)) throw ExtractionError("params", "min_exp must be below max_exp");
}

Clustering dbscan(const std::vector<Point2>& points, double eps, int min_pts) {
  const NeighborIndex index(points, eps);
  std::vector<int> label(points.size(), kUnvisited);
  int next_cluster = 0;

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (label[i] != kUnvisited) continue;
    const std::vector<std::size_t> seeds = index.neighbors(i);
    if (static_cast<int>(seeds.size()) < min_pts) {
      label[i] = kNoise;
      continue;
    }
    const int id = next_cluster++;
    label[i] = id;
    std::deque<std::size_t> frontier(seeds.begin(), seeds.end());
    while (!frontier.empty()) {
      const std::size_t j = frontier.front();
      frontier.pop_front();
      if (label[j] == kNoise) label[j] = id;  // border point
      if (label[j] != kUnvisited) continue;
      label[j] = id;
      const std::vector<std::size_t> more = index.neighbors(j);
      if (static_cast<int>(more.size()) >= min_pts)
        frontier.insert(frontier.end(), more.begin(), more.end());
    }
  }

  Clustering out;
  out.clusters.resize(static_cast<std::size_t>(next_cluster));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (label[i] == kNoise) {
      out.noise.push_back(points[i]);
      out.noise_indices.push_back(i);
    } else {
      Cluster& c = out.clusters[static_cast<std::size_t>(label[i])];
      c.points.push_back(points[i]);
      c.indices.push_back(i);
    }
  }
  return out;
}

std::optional<Cluster> select_border_cluster(const std::vector<Cluster>& clusters,
                                             const ExtractionParams& params) {
  std::vector<const Cluster*> candidates;
  for (const Cluster& c : clusters)
    if (static_cast<int>(c.points.size()) >= params.min_size && !c.points.empty())
      candidates.push_back(&c);
  std::stable_sort(candidates.begin(), candidates.end(), [](const Cluster* a, const Cluster* b) {
    return a->points.size() > b->points.size();
  });
  for (const Cluster* c : candidates) {
    const double expansion = aabb_diagonal(c->points);
    if (params.min_exp < expansion && expansion < params.max_exp) return *c;
  }
  return std::nullopt;
}

ThinningResult thin_detailed(const std::vector<Point2>& points, double thin_dist) {
  const std::size_t n = points.size();
  const NeighborIndex index(points, thin_dist);
  std::vector<std::vector<std::size_t>> adjacency(n);
  std::vector<std::size_t> live_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    adjacency[i] = index.neighbors(i);
    live_degree[i] = adjacency[i].size();
  }
  std::vector<std::uint8_t> alive(n, 1);

  ThinningResult out;
  while (true) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i)
      if (alive[i] && (best == n || live_degree[i] > live_degree[best])) best = i;
    if (best == n || live_degree[best] == 0) break;

    std::vector<std::size_t> group{best};
    for (std::size_t j : adjacency[best])
      if (alive[j]) group.push_back(j);

    Point2 sum;
    for (std::size_t j : group) sum = sum + points[j];
    out.points.push_back(sum / static_cast<double>(group.size()));

    for (std::size_t j : group) alive[j] = 0;
    for (std::size_t j : group)
      for (std::size_t k : adjacency[j])
        if (alive[k]) --live_degree[k];
    out.groups.push_back(std::move(group));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    out.points.push_back(points[i]);
    out.survivors.push_back(i);
  }
  return out;
}

std::vector<Point2> thin(const std::vector<Point2>& points, double thin_dist) {
  return thin_detailed(points, thin_dist).points;
}

PolygonResult generate_polygon_detailed(const std::vector<Point2>& points, double poly_dist) {
  if (points.size() < 2) throw ExtractionError("polygon", "border too sparse");
  const NeighborIndex index(points, poly_dist);
  std::vector<std::uint8_t> marked(points.size(), 0);
  std::size_t marked_count = 1;
  marked[0] = 1;
  std::vector<std::size_t> dir1{0};
  std::vector<std::size_t> dir2;
  bool forward = true;
  std::size_t current = 0;

  while (marked_count < points.size()) {
    std::size_t nearest = points.size();
    double nearest_dist = 0.0;
    for (std::size_t j : index.neighbors(current)) {
      if (marked[j]) continue;
      const double d = distance(points[current], points[j]);
      if (nearest == points.size() || d < nearest_dist) {
        nearest = j;
        nearest_dist = d;
      }
    }
    if (nearest != points.size()) {
      (forward ? dir1 : dir2).push_back(nearest);
      marked[nearest] = 1;
      ++marked_count;
      current = nearest;
    } else if (forward) {
      current = 0;
      forward = false;
    } else {
      break;
    }
  }

  std::reverse(dir1.begin(), dir1.end());
  std::vector<std::size_t> order = dir1;
  order.insert(order.end(), dir2.begin(), dir2.end());

  std::vector<Point2> vertices;
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    if (!vertices.empty() && vertices.back() == points[idx]) continue;
    vertices.push_back(points[idx]);
    kept.push_back(idx);
  }
  if (vertices.size() < 2) throw ExtractionError("polygon", "border too sparse");
  return {Polyline(std::move(vertices)), std::move(kept), points.size() - marked_count};
}

Polyline generate_polygon(const std::vector<Point2>& points, double poly_dist) {
  return generate_polygon_detailed(points, poly_dist).chain;
}

Point2 extract_seed(const std::vector<Point2>& points, const ExtractionParams& params) {
  const Clustering clustering = dbscan(points, params.eps, params.min_pts);
  const Cluster* largest = nullptr;
  for (const Cluster& c : clustering.clusters)
    if (largest == nullptr || c.points.size() > largest->points.size()) largest = &c;
  if (largest == nullptr) throw ExtractionError("seed", "no stable seed");
  return centroid(largest->points);
}

BorderKind classify_chain(const Polyline& chain, const ExtractionParams& params) {
  const double gap = distance(chain.front(), chain.back());
  const double length = polyline_length(chain);
  if (gap <= params.closure_dist && gap <= kMaxClosureGapRatio * length)
    return BorderKind::Polygon;
  return BorderKind::SeparatingCurve;
}

ExtractionResult extract_border_detailed(const std::vector<Point2>& border_points,
                                         const std::vector<Point2>& seed_points,
                                         const ExtractionParams& params) {
  params.validate();
  ExtractionDiagnostics diag;
  diag.input_points = border_points.size();

  const Clustering clustering = dbscan(border_points, params.eps, params.min_pts);
  diag.noise_points = clustering.noise.size();
  diag.cluster_count = clustering.clusters.size();
  const std::optional<Cluster> cluster = select_border_cluster(clustering.clusters, params);
  if (!cluster) throw ExtractionError("clustering", "no border found");
  diag.border_cluster_size = cluster->points.size();

  const std::vector<Point2> thinned = thin(cluster->points, params.thin_dist);
  diag.thinned_points = thinned.size();
  PolygonResult polygon = generate_polygon_detailed(thinned, params.poly_dist);
  diag.dropped_points = polygon.dropped;

  const BorderKind kind = classify_chain(polygon.chain, params);
  const Point2 seed = extract_seed(seed_points, params);
  return {VirtualBorder{std::move(polygon.chain), seed, 1.0, kind}, diag};
}

VirtualBorder extract_border(const std::vector<Point2>& border_points,
                             const std::vector<Point2>& seed_points,
                             const ExtractionParams& params) {
  return extract_border_detailed(border_points, seed_points, params).border;
}

}  // namespace borderforge
