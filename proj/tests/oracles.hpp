#pragma once

// Slow reference implementations the library is checked against. Nothing
// here calls into the code under test except for plain data types.

#include "borderforge/geometry.hpp"
#include "borderforge/gridmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using borderforge::CellIndex;
using borderforge::Occupancy;
using borderforge::OccupancyGrid;
using borderforge::Point2;

inline double dist(Point2 a, Point2 b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::vector<std::size_t> parent;
};

/// Connected components of the "distance <= eps" graph, as sorted index sets.
/// Singletons are returned separately: with min_pts = 1 they are exactly the noise.
struct Components {
  std::set<std::vector<std::size_t>> groups;
  std::vector<std::size_t> singletons;
};

inline Components eps_components(const std::vector<Point2>& pts, double eps) {
  UnionFind uf(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (dist(pts[i], pts[j]) <= eps) uf.join(i, j);
  std::vector<std::vector<std::size_t>> by_root(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) by_root[uf.find(i)].push_back(i);
  Components out;
  for (auto& g : by_root) {
    if (g.size() == 1) out.singletons.push_back(g.front());
    if (g.size() > 1) out.groups.insert(g);
  }
  std::sort(out.singletons.begin(), out.singletons.end());
  return out;
}

/// Winding number of a closed ring (closing edge implied); nonzero means inside.
inline int winding_number(Point2 p, const std::vector<Point2>& ring) {
  int wn = 0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = ring[i];
    const Point2 b = ring[(i + 1) % n];
    const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y) {
      if (b.y > p.y && side > 0) ++wn;
    } else if (b.y <= p.y && side < 0) {
      --wn;
    }
  }
  return wn;
}

inline double ring_boundary_distance(Point2 p, const std::vector<Point2>& ring) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Point2 a = ring[i];
    const Point2 b = ring[(i + 1) % ring.size()];
    const Point2 ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = len2 > 0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, dist(p, a + ab * t));
  }
  return best;
}

inline bool obstacle(Occupancy o) { return o != Occupancy::Free; }

/// Cells within `inflation` (centre to centre) of an Occupied or Unknown cell, by brute force.
inline std::vector<std::uint8_t> inflate(const OccupancyGrid& g, double inflation) {
  const int w = g.width();
  const int h = g.height();
  const double r = inflation / g.resolution();
  std::vector<std::uint8_t> out(g.cells().size(), 0);
  for (int row = 0; row < h; ++row)
    for (int col = 0; col < w; ++col) {
      for (int r2 = 0; r2 < h && !out[g.index({col, row})]; ++r2)
        for (int c2 = 0; c2 < w; ++c2) {
          if (!obstacle(g.at({c2, r2}))) continue;
          const double d2 = double(c2 - col) * (c2 - col) + double(r2 - row) * (r2 - row);
          if (d2 <= r * r + 1e-9) {
            out[g.index({col, row})] = 1;
            break;
          }
        }
    }
  return out;
}

/// Shortest 8-connected path cost over unblocked cells; diagonal steps may not
/// cut a blocked corner. Infinity when unreachable.
inline double dijkstra(const OccupancyGrid& g, const std::vector<std::uint8_t>& blocked,
                       CellIndex s, CellIndex t) {
  const int w = g.width();
  const auto idx = [&](int c, int r) { return static_cast<std::size_t>(r) * w + c; };
  const auto free = [&](int c, int r) {
    return c >= 0 && r >= 0 && c < w && r < g.height() && !blocked[idx(c, r)];
  };
  std::vector<double> cost(blocked.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  cost[idx(s.col, s.row)] = 0;
  pq.push({0, idx(s.col, s.row)});
  while (!pq.empty()) {
    const auto [d, i] = pq.top();
    pq.pop();
    if (d > cost[i]) continue;
    const int c = static_cast<int>(i % w);
    const int r = static_cast<int>(i / w);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (!dc && !dr) continue;
        if (!free(c + dc, r + dr)) continue;
        const bool diag = dc && dr;
        if (diag && (!free(c + dc, r) || !free(c, r + dr))) continue;
        const double nd = d + (diag ? std::numbers::sqrt2 : 1.0) * g.resolution();
        const std::size_t j = idx(c + dc, r + dr);
        if (nd < cost[j]) {
          cost[j] = nd;
          pq.push({nd, j});
        }
      }
  }
  return cost[idx(t.col, t.row)];
}

/// 4-connected flood of Free cells from `seed` in `g`; returns a cell mask.
inline std::vector<std::uint8_t> flood(const OccupancyGrid& g, CellIndex seed) {
  std::vector<std::uint8_t> mask(g.cells().size(), 0);
  if (g.at(seed) != Occupancy::Free) return mask;
  std::deque<CellIndex> q{seed};
  mask[g.index(seed)] = 1;
  while (!q.empty()) {
    const CellIndex c = q.front();
    q.pop_front();
    const CellIndex nbs[] = {{c.col + 1, c.row}, {c.col - 1, c.row}, {c.col, c.row + 1},
                             {c.col, c.row - 1}};
    for (const CellIndex& n : nbs) {
      if (!g.contains(n) || mask[g.index(n)] || g.at(n) != Occupancy::Free) continue;
      mask[g.index(n)] = 1;
      q.push_back(n);
    }
  }
  return mask;
}

/// Mixed Gaussian blobs plus uniform noise inside [0, extent]^2.
inline std::vector<Point2> blobs_and_noise(std::mt19937_64& rng, std::size_t max_points,
                                           double extent) {
  std::uniform_int_distribution<std::size_t> count(1, max_points);
  const std::size_t n = count(rng);
  std::uniform_int_distribution<int> blobs(0, 5);
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> spread(0.02, 0.4);
  std::vector<Point2> centres;
  std::vector<double> sigmas;
  for (int b = blobs(rng); b > 0; --b) {
    centres.push_back({pos(rng), pos(rng)});
    sigmas.push_back(spread(rng));
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> pts;
  while (pts.size() < n) {
    if (centres.empty() || u(rng) < 0.2) {
      pts.push_back({pos(rng), pos(rng)});
      continue;
    }
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, centres.size() - 1)(rng);
    std::normal_distribution<double> g(0.0, sigmas[k]);
    pts.push_back({centres[k].x + g(rng), centres[k].y + g(rng)});
  }
  return pts;
}

}  // namespace oracle
