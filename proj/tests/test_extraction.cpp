#include "borderforge/extraction.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>
#include <random>
#include <set>

using namespace borderforge;

namespace {

std::set<std::vector<std::size_t>> cluster_sets(const Clustering& c) {
  std::set<std::vector<std::size_t>> out;
  for (const Cluster& k : c.clusters) out.insert(k.indices);
  return out;
}

/// Reference thinning written straight from the rule: repeatedly take the live
/// point with the most live neighbours (lowest index on ties) and merge it with them.
ThinningResult thin_oracle(const std::vector<Point2>& pts, double d) {
  const std::size_t n = pts.size();
  std::vector<bool> live(n, true);
  ThinningResult out;
  while (true) {
    std::size_t best = n, best_deg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!live[i]) continue;
      std::size_t deg = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && live[j] && oracle::dist(pts[i], pts[j]) <= d) ++deg;
      if (deg > best_deg) {
        best = i;
        best_deg = deg;
      }
    }
    if (best == n) break;
    std::vector<std::size_t> group{best};
    for (std::size_t j = 0; j < n; ++j)
      if (j != best && live[j] && oracle::dist(pts[best], pts[j]) <= d) group.push_back(j);
    Point2 sum;
    for (std::size_t j : group) {
      sum = sum + pts[j];
      live[j] = false;
    }
    out.points.push_back(sum / double(group.size()));
    out.groups.push_back(group);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (live[i]) {
      out.points.push_back(pts[i]);
      out.survivors.push_back(i);
    }
  return out;
}

/// Reference chain growth: nearest unmarked neighbour within d, lowest index on ties.
std::vector<std::size_t> chain_oracle(const std::vector<Point2>& pts, double d) {
  std::vector<bool> marked(pts.size(), false);
  marked[0] = true;
  const auto grow = [&](std::vector<std::size_t>& dir) {
    std::size_t cur = 0;
    while (true) {
      std::size_t best = pts.size();
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (marked[j] || oracle::dist(pts[cur], pts[j]) > d) continue;
        if (best == pts.size() || oracle::dist(pts[cur], pts[j]) < oracle::dist(pts[cur], pts[best]))
          best = j;
      }
      if (best == pts.size()) return;
      marked[best] = true;
      dir.push_back(best);
      cur = best;
    }
  };
  std::vector<std::size_t> dir1{0}, dir2;
  grow(dir1);
  grow(dir2);
  std::vector<std::size_t> order(dir1.rbegin(), dir1.rend());
  order.insert(order.end(), dir2.begin(), dir2.end());
  return order;
}

std::vector<Point2> noisy_stroke(std::mt19937_64& rng, const std::vector<Point2>& corners,
                                 double spacing, double sigma, bool closed) {
  std::vector<Point2> ring = corners;
  if (closed) ring.push_back(corners.front());
  const Polyline line(ring);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Point2> out;
  for (double s = 0; s < polyline_length(line); s += spacing) {
    const Point2 p = line.point_at(s);
    out.push_back({p.x + g(rng), p.y + g(rng)});
  }
  return out;
}

double hausdorff(const std::vector<Point2>& a, const std::vector<Point2>& ring) {
  double worst = 0;
  for (const Point2& p : a) worst = std::max(worst, oracle::ring_boundary_distance(p, ring));
  return worst;
}

}  // namespace

TEST_CASE("params validation") {
  ExtractionParams p;
  CHECK_NOTHROW(p.validate());
  p.eps = 0;
  CHECK_THROWS_AS(p.validate(), ExtractionError);
  p = {};
  p.min_pts = 0;
  CHECK_THROWS_AS(p.validate(), ExtractionError);
  p = {};
  p.min_exp = 2.0;
  p.max_exp = 1.0;
  CHECK_THROWS_AS(p.validate(), ExtractionError);
}

TEST_CASE("dbscan basics") {
  const Clustering empty = dbscan({}, 0.5, 1);
  CHECK(empty.clusters.empty());
  CHECK(empty.noise.empty());
  const Clustering single = dbscan({{1, 1}}, 0.5, 1);
  CHECK(single.clusters.empty());
  CHECK(single.noise.size() == 1);
  // A pair is a cluster under min_pts = 1 (each has one other point in range).
  CHECK(dbscan({{0, 0}, {0.3, 0}}, 0.5, 1).clusters.size() == 1);
  CHECK(dbscan({{0, 0}, {0.3, 0}}, 0.5, 2).clusters.empty());
}

TEST_CASE("dbscan with min_pts 1 equals eps-connected components") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = oracle::blobs_and_noise(rng, 200, 6.0);
    const double eps = trial % 2 ? 0.5 : 0.2;
    const Clustering got = dbscan(pts, eps, 1);
    const oracle::Components want = oracle::eps_components(pts, eps);
    CHECK(cluster_sets(got) == want.groups);
    CHECK(got.noise_indices == want.singletons);
    for (const Cluster& c : got.clusters) {
      REQUIRE(c.points.size() == c.indices.size());
      for (std::size_t i = 0; i < c.indices.size(); ++i) CHECK(c.points[i] == pts[c.indices[i]]);
    }
  }
}

TEST_CASE("dbscan general min_pts: cores, noise and permutation invariance") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = oracle::blobs_and_noise(rng, 150, 4.0);
    const double eps = 0.3;
    const int min_pts = 1 + trial % 4;
    const Clustering got = dbscan(pts, eps, min_pts);

    std::vector<std::size_t> degree(pts.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (i != j && oracle::dist(pts[i], pts[j]) <= eps) ++degree[i];
    const auto core = [&](std::size_t i) { return degree[i] >= std::size_t(min_pts); };

    // Partition of the input.
    std::vector<int> owner(pts.size(), -1);
    for (std::size_t k = 0; k < got.clusters.size(); ++k)
      for (std::size_t i : got.clusters[k].indices) {
        CHECK(owner[i] == -1);
        owner[i] = int(k);
      }
    for (std::size_t i : got.noise_indices) {
      CHECK(owner[i] == -1);
      owner[i] = -2;
    }
    for (int o : owner) CHECK(o != -1);

    // Noise is exactly the non-core points with no core point in range.
    for (std::size_t i = 0; i < pts.size(); ++i) {
      bool near_core = core(i);
      for (std::size_t j = 0; j < pts.size() && !near_core; ++j)
        near_core = j != i && core(j) && oracle::dist(pts[i], pts[j]) <= eps;
      CHECK((owner[i] == -2) == !near_core);
    }
    // Two core points in range share a cluster; each cluster has a core point.
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (core(i) && core(j) && oracle::dist(pts[i], pts[j]) <= eps) CHECK(owner[i] == owner[j]);
    for (const Cluster& c : got.clusters)
      CHECK(std::any_of(c.indices.begin(), c.indices.end(), core));

    // The core membership of clusters does not depend on input order.
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Point2> shuffled(pts.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = pts[perm[i]];
    const Clustering again = dbscan(shuffled, eps, min_pts);
    std::set<std::vector<std::size_t>> a, b;
    for (const Cluster& c : got.clusters) {
      std::vector<std::size_t> cores;
      for (std::size_t i : c.indices)
        if (core(i)) cores.push_back(i);
      a.insert(cores);
    }
    for (const Cluster& c : again.clusters) {
      std::vector<std::size_t> cores;
      for (std::size_t i : c.indices)
        if (core(perm[i])) cores.push_back(perm[i]);
      std::sort(cores.begin(), cores.end());
      b.insert(cores);
    }
    CHECK(a == b);
  }
}

TEST_CASE("select_border_cluster") {
  const auto cluster = [](std::size_t n, double diag, double x0) {
    Cluster c;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = n > 1 ? double(i) / double(n - 1) : 0.0;
      c.points.push_back({x0 + t * diag / std::sqrt(2.0), t * diag / std::sqrt(2.0)});
      c.indices.push_back(i);
    }
    return c;
  };
  ExtractionParams p;
  auto pick = select_border_cluster({cluster(50, 2.0, 0)}, p);
  REQUIRE(pick);
  CHECK(pick->points.size() == 50);
  CHECK_FALSE(select_border_cluster({cluster(9, 2.0, 0)}, p));
  pick = select_border_cluster({cluster(40, 0.1, 0), cluster(30, 1.0, 5)}, p);
  REQUIRE(pick);
  CHECK(pick->points.size() == 30);
  p.max_exp = 0.5;
  CHECK_FALSE(select_border_cluster({cluster(40, 0.1, 0), cluster(30, 1.0, 5)}, p));
}

TEST_CASE("thinning matches the reference and partitions its input") {
  CHECK(thin({{0, 0}, {1, 0}, {2, 0}}, 0.1) == std::vector<Point2>{{0, 0}, {1, 0}, {2, 0}});
  CHECK(thin({{1, 1}, {1, 1}}, 0.1) == std::vector<Point2>{{1, 1}});

  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = trial % 2 ? noisy_stroke(rng, {{0, 0}, {2, 0.3}}, 0.02, 0.03, false)
                               : oracle::blobs_and_noise(rng, 200, 2.0);
    const ThinningResult got = thin_detailed(pts, 0.1);
    const ThinningResult want = thin_oracle(pts, 0.1);
    CHECK(got.groups == want.groups);
    CHECK(got.survivors == want.survivors);
    REQUIRE(got.points.size() == got.groups.size() + got.survivors.size());

    std::vector<int> seen(pts.size(), 0);
    for (std::size_t g = 0; g < got.groups.size(); ++g) {
      CHECK(got.groups[g].size() >= 2);
      Point2 sum;
      for (std::size_t i : got.groups[g]) {
        ++seen[i];
        sum = sum + pts[i];
      }
      const Point2 mean = sum / double(got.groups[g].size());
      CHECK(got.points[g].x == doctest::Approx(mean.x).epsilon(1e-12));
      CHECK(got.points[g].y == doctest::Approx(mean.y).epsilon(1e-12));
    }
    for (std::size_t k = 0; k < got.survivors.size(); ++k) {
      ++seen[got.survivors[k]];
      CHECK(got.points[got.groups.size() + k] == pts[got.survivors[k]]);
    }
    for (int s : seen) CHECK(s == 1);
    CHECK(std::is_sorted(got.survivors.begin(), got.survivors.end()));
  }
}

TEST_CASE("generate_polygon fixtures") {
  // Collinear, spaced 0.3 m, index 0 in the middle.
  std::vector<Point2> line;
  for (int i : {5, 0, 9, 3, 7, 1, 8, 2, 6, 4}) line.push_back({0.3 * i, 0.0});
  const Polyline chain = generate_polygon(line, 0.5);
  REQUIRE(chain.size() == 10);
  bool ascending = chain[1].x > chain[0].x;
  for (std::size_t i = 1; i < chain.size(); ++i)
    CHECK((chain[i].x > chain[i - 1].x) == ascending);

  // Circle with 0.4 m spacing.
  const int n = 40;
  const double r = n * 0.4 / (2 * std::numbers::pi);
  std::vector<Point2> circle;
  for (int k = 0; k < n; ++k) {
    const int i = (k * 17) % n;  // scrambled input order
    circle.push_back({r * std::cos(2 * std::numbers::pi * i / n), r * std::sin(2 * std::numbers::pi * i / n)});
  }
  const PolygonResult ring = generate_polygon_detailed(circle, 0.5);
  CHECK(ring.chain.size() == std::size_t(n));
  CHECK(ring.dropped == 0);
  const double tour = polyline_length(ring.chain) + distance(ring.chain.front(), ring.chain.back());
  CHECK(tour <= 2 * std::numbers::pi * r + 0.5);
  CHECK(distance(ring.chain.front(), ring.chain.back()) <= 0.5);

  // Two far groups: only the one holding index 0 survives.
  const PolygonResult split =
      generate_polygon_detailed({{0, 0}, {0.3, 0}, {10, 0}, {10.3, 0}, {0.6, 0}}, 0.5);
  CHECK(split.chain.size() == 3);
  CHECK(split.dropped == 2);

  CHECK_THROWS_AS(generate_polygon({{0, 0}}, 0.5), ExtractionError);
  CHECK_THROWS_AS(generate_polygon({{0, 0}, {5, 5}}, 0.5), ExtractionError);
}

TEST_CASE("generate_polygon chain property on thinned random sets") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point2> corners;
    const int nc = std::uniform_int_distribution<int>(2, 5)(rng);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int i = 0; i < nc; ++i) corners.push_back({u(rng), u(rng)});
    const auto raw = noisy_stroke(rng, corners, 0.03, 0.04, trial % 3 == 0);
    if (raw.size() < 2) continue;
    const auto pts = thin(raw, 0.1);
    if (pts.size() < 2) continue;
    PolygonResult got{Polyline({{0, 0}, {1, 0}}), {}, 0};
    try {
      got = generate_polygon_detailed(pts, 0.5);
    } catch (const ExtractionError&) {
      continue;
    }
    for (std::size_t i = 1; i < got.chain.size(); ++i)
      CHECK(distance(got.chain[i - 1], got.chain[i]) <= 0.5 + 1e-12);
    REQUIRE(got.order.size() == got.chain.size());
    for (std::size_t i = 0; i < got.order.size(); ++i) CHECK(got.chain[i] == pts[got.order[i]]);
    CHECK(got.chain.size() + got.dropped <= pts.size());
    CHECK(got.order == chain_oracle(pts, 0.5));
  }
}

TEST_CASE("extract_seed") {
  std::mt19937_64 rng(45);
  std::normal_distribution<double> g(0.0, 0.02);
  std::vector<Point2> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({1 + g(rng), 1 + g(rng)});
  const Point2 s = extract_seed(pts, {});
  const Point2 mean = centroid(pts);
  CHECK(distance(s, {1, 1}) < 0.02);
  CHECK(distance(s, mean) < 1e-12);
  const Point2 mid = extract_seed({{0, 0}, {0.01, 0}}, {});
  CHECK(mid.x == doctest::Approx(0.005));
  CHECK_THROWS_AS(extract_seed({{0, 0}}, {}), ExtractionError);
  CHECK_THROWS_AS(extract_seed({}, {}), ExtractionError);
}

TEST_CASE("extract_border end to end") {
  std::mt19937_64 rng(46);
  const std::vector<Point2> rect{{1, 1}, {3, 1}, {3, 2}, {1, 2}};
  std::vector<Point2> ring = rect;
  const auto stroke = noisy_stroke(rng, rect, 0.016, 0.0, true);
  const VirtualBorder poly = extract_border(stroke, {{2, 1.5}, {2.01, 1.5}}, {});
  CHECK(poly.kind == BorderKind::Polygon);
  CHECK(hausdorff(poly.chain.vertices(), ring) < 0.1);
  CHECK(poly.occupancy == 1.0);

  const auto line = noisy_stroke(rng, {{1, 1}, {3, 1}}, 0.016, 0.0, false);
  const VirtualBorder curve = extract_border(line, {{2, 2}, {2.01, 2}}, {});
  CHECK(curve.kind == BorderKind::SeparatingCurve);

  // Loop plus a dense blob plus scattered noise: the loop wins.
  auto mixed = noisy_stroke(rng, rect, 0.02, 0.01, true);
  std::normal_distribution<double> blob(0.0, 0.02);
  for (int i = 0; i < 40; ++i) mixed.push_back({6 + blob(rng), 4 + blob(rng)});
  std::uniform_real_distribution<double> u(0.0, 8.0);
  for (int i = 0; i < 15; ++i) mixed.push_back({u(rng), 4.5 + u(rng)});
  const ExtractionResult r = extract_border_detailed(mixed, {{2, 1.5}, {2.01, 1.5}}, {});
  CHECK(r.border.kind == BorderKind::Polygon);
  CHECK(hausdorff(r.border.chain.vertices(), ring) < 0.1);
  CHECK(r.diagnostics.noise_points >= 10);
  CHECK(r.diagnostics.cluster_count >= 2);

  const VirtualBorder again = extract_border(mixed, {{2, 1.5}, {2.01, 1.5}}, {});
  CHECK(again.chain == r.border.chain);
  CHECK(again.seed == r.border.seed);

  try {
    (void)extract_border({{0, 0}, {0.01, 0}}, {{1, 1}, {1.01, 1}}, {});
    FAIL("no border expected");
  } catch (const ExtractionError& e) {
    CHECK(e.stage() == "clustering");
  }
}

TEST_CASE("classify_chain") {
  ExtractionParams p;
  CHECK(classify_chain(Polyline({{0, 0}, {2, 0}}), p) == BorderKind::SeparatingCurve);
  CHECK(classify_chain(Polyline({{0, 0}, {2, 0}, {2, 2}, {0, 2}, {0, 0.3}}), p) ==
        BorderKind::Polygon);
}
