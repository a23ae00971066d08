#include "borderforge/gridmap.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace borderforge;

namespace {

OccupancyGrid free_grid(int w, int h, double res = 0.025) { return {w, h, res, Pose2{}}; }

std::set<std::pair<int, int>> as_set(const std::vector<CellIndex>& cells) {
  std::set<std::pair<int, int>> s;
  for (const auto& c : cells) s.insert({c.col, c.row});
  return s;
}

/// Random grid with a few occupied/unknown rectangles.
OccupancyGrid random_grid(std::mt19937_64& rng, int max_side) {
  std::uniform_int_distribution<int> side(20, max_side);
  OccupancyGrid g(side(rng), side(rng), 0.05, Pose2{});
  std::uniform_int_distribution<int> nrect(0, 4);
  for (int k = nrect(rng); k > 0; --k) {
    std::uniform_int_distribution<int> c0(0, g.width() - 1);
    std::uniform_int_distribution<int> r0(0, g.height() - 1);
    const int c = c0(rng);
    const int r = r0(rng);
    const int cw = std::uniform_int_distribution<int>(1, 8)(rng);
    const int rh = std::uniform_int_distribution<int>(1, 8)(rng);
    const Occupancy o = k % 3 == 0 ? Occupancy::Unknown : Occupancy::Occupied;
    for (int rr = r; rr < std::min(g.height(), r + rh); ++rr)
      for (int cc = c; cc < std::min(g.width(), c + cw); ++cc) g.set({cc, rr}, o);
  }
  return g;
}

Point2 random_point_in(std::mt19937_64& rng, const OccupancyGrid& g, double margin = 0.0) {
  std::uniform_real_distribution<double> x(margin, g.width() * g.resolution() - margin);
  std::uniform_real_distribution<double> y(margin, g.height() * g.resolution() - margin);
  return {x(rng), y(rng)};
}

}  // namespace

TEST_CASE("OccupancyGrid invariants") {
  CHECK_THROWS_AS(OccupancyGrid(2, 2, 0.0, Pose2{}), MapError);
  CHECK_THROWS_AS(OccupancyGrid(2, 2, 0.1, Pose2{}, std::vector<Occupancy>(3)), MapError);
  const OccupancyGrid g = free_grid(4, 3);
  CHECK(g.cells().size() == 12);
  CHECK(g.count(Occupancy::Free) == 12);
}

TEST_CASE("world_to_cell") {
  const OccupancyGrid g = free_grid(100, 100);
  CHECK(world_to_cell(g, {0.0, 0.0}) == CellIndex{0, 0});
  CHECK(world_to_cell(g, {0.05, 0.025}) == CellIndex{2, 1});
  try {
    (void)world_to_cell(g, {-0.5, 1.0});
    FAIL("expected OutOfBoundsError");
  } catch (const OutOfBoundsError& e) {
    CHECK(e.coordinate() == Point2{-0.5, 1.0});
  }

  std::mt19937_64 rng(11);
  const OccupancyGrid rotated(80, 60, 0.025, Pose2({1.0, -2.0}, 0.4));
  for (const OccupancyGrid* grid : {&g, &rotated}) {
    for (int i = 0; i < 1000; ++i) {
      const CellIndex c{std::uniform_int_distribution<int>(0, grid->width() - 1)(rng),
                        std::uniform_int_distribution<int>(0, grid->height() - 1)(rng)};
      const Point2 centre = cell_to_world(*grid, c);
      std::uniform_real_distribution<double> jitter(-0.49, 0.49);
      const Point2 p = grid->origin().transform(
          grid->origin().inverse_transform(centre) +
          Point2{jitter(rng) * grid->resolution(), jitter(rng) * grid->resolution()});
      CHECK(world_to_cell(*grid, p) == c);
      CHECK(distance(cell_to_world(*grid, world_to_cell(*grid, p)), p) <=
            grid->resolution() / std::sqrt(2.0) + 1e-12);
    }
  }
}

TEST_CASE("rasterize_chain") {
  const OccupancyGrid g = free_grid(40, 40, 0.1);
  const auto row = rasterize_chain(g, Polyline({{0.05, 0.55}, {1.05, 0.55}}));
  CHECK(row.size() == 11);
  for (const auto& c : row) CHECK(c.row == 5);

  const OccupancyGrid unit = free_grid(5, 5, 1.0);
  const auto diag = rasterize_chain(unit, Polyline({{0, 0}, {3, 3}}));
  CHECK(as_set(diag) == std::set<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}, {3, 3}});

  CHECK_THROWS_AS(rasterize_chain(g, Polyline({{0.5, 0.5}, {5.0, 0.5}})), OutOfBoundsError);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Point2> v;
    const int n = std::uniform_int_distribution<int>(2, 6)(rng);
    while (static_cast<int>(v.size()) < n) {
      const Point2 p = random_point_in(rng, g);
      if (v.empty() || distance(v.back(), p) > 1e-6) v.push_back(p);
    }
    const Polyline chain(v);
    const auto cells = rasterize_chain(g, chain);
    const auto set = as_set(cells);
    CHECK(set.size() == cells.size());
    // The raster of a connected chain is one 8-connected set.
    std::set<std::pair<int, int>> reached{*set.begin()};
    std::vector<std::pair<int, int>> stack{*set.begin()};
    while (!stack.empty()) {
      const auto [c0, r0] = stack.back();
      stack.pop_back();
      for (int dc = -1; dc <= 1; ++dc)
        for (int dr = -1; dr <= 1; ++dr)
          if (set.contains({c0 + dc, r0 + dr}) && reached.insert({c0 + dc, r0 + dr}).second)
            stack.push_back({c0 + dc, r0 + dr});
    }
    CHECK(reached.size() == set.size());
    const double length = polyline_length(chain);
    const double step = g.resolution() / 4;
    for (double s = 0; s <= length; s += step) {
      const CellIndex c = world_to_cell(g, chain.point_at(s));
      CHECK(set.contains({c.col, c.row}));
    }
  }
}

TEST_CASE("extend_to_physical_borders") {
  // Walls at y in [0.5, 0.55) and [1.55, 1.6): the free corridor between them is 1 m wide.
  OccupancyGrid g = free_grid(80, 80);
  for (int col = 0; col < 80; ++col) {
    for (int row = 20; row < 22; ++row) g.set({col, row}, Occupancy::Occupied);
    for (int row = 62; row < 64; ++row) g.set({col, row}, Occupancy::Occupied);
  }
  const Polyline stub({{1.0, 0.9}, {1.0, 1.2}});
  const Polyline ext = extend_to_physical_borders(g, stub);
  REQUIRE(ext.size() == 4);
  CHECK(ext.front().x == doctest::Approx(1.0));
  CHECK(ext.back().x == doctest::Approx(1.0));
  // Analytic hits: the last free position before y = 0.55 and y = 1.55.
  CHECK(std::abs(ext.front().y - 0.55) <= g.resolution());
  CHECK(std::abs(ext.back().y - 1.55) <= g.resolution());

  const Polyline touching({{1.0, 0.56}, {1.0, 1.54}});
  const Polyline same = extend_to_physical_borders(g, touching);
  CHECK(distance(same.front(), touching.front()) < g.resolution());
  CHECK(distance(same.back(), touching.back()) < g.resolution());

  // Without walls the extension runs to the map edge.
  const OccupancyGrid open = free_grid(40, 40);
  const Polyline edge = extend_to_physical_borders(open, Polyline({{0.4, 0.5}, {0.6, 0.5}}));
  CHECK(edge.front().x < open.resolution());
  CHECK(edge.back().x > 1.0 - open.resolution());
}

TEST_CASE("integrate_border polygon around a free square metre") {
  const OccupancyGrid prior = free_grid(120, 120);
  const Polyline square({{1.0, 1.0}, {2.0, 1.0}, {2.0, 2.0}, {1.0, 2.0}});
  const VirtualBorder v{square, {1.5, 1.5}, 1.0, BorderKind::Polygon};
  const OccupancyGrid post = integrate_border(prior, v);

  const auto border = as_set(border_cells(prior, v));
  OccupancyGrid walls = prior;
  for (const auto& [c, r] : border) walls.set({c, r}, Occupancy::Occupied);
  const auto fill = oracle::flood(walls, world_to_cell(prior, v.seed));
  const std::size_t fill_count = std::count(fill.begin(), fill.end(), 1);
  const std::size_t changed = restriction_area(prior, post).size();
  CHECK(changed == fill_count + border.size());
  // About one square metre of 2.5 cm cells plus the outline.
  CHECK(changed >= 1600);
  CHECK(changed <= 1600 + 4 * 42);
  CHECK(post.at(world_to_cell(prior, {0.5, 0.5})) == Occupancy::Free);
}

TEST_CASE("integrate_border seed outside a closed polygon fills the rest of the room") {
  OccupancyGrid prior = free_grid(100, 100);
  for (int i = 0; i < 100; ++i) {
    prior.set({i, 0}, Occupancy::Occupied);
    prior.set({i, 99}, Occupancy::Occupied);
    prior.set({0, i}, Occupancy::Occupied);
    prior.set({99, i}, Occupancy::Occupied);
  }
  const VirtualBorder v{Polyline({{1.0, 1.0}, {1.5, 1.0}, {1.5, 1.5}, {1.0, 1.5}}),
                        {0.3, 0.3}, 1.0, BorderKind::Polygon};
  const OccupancyGrid post = integrate_border(prior, v);
  const auto border = as_set(border_cells(prior, v));
  OccupancyGrid walls = prior;
  for (const auto& [c, r] : border) walls.set({c, r}, Occupancy::Occupied);
  // Complement: every free cell of `walls` not reachable from a point inside the polygon.
  const auto inside = oracle::flood(walls, world_to_cell(prior, {1.25, 1.25}));
  for (std::size_t i = 0; i < post.cells().size(); ++i) {
    const bool expect_free = inside[i] != 0;
    CHECK((post.cells()[i] == Occupancy::Free) == expect_free);
  }
}

TEST_CASE("integrate_border errors") {
  OccupancyGrid prior = free_grid(60, 60);
  prior.set({5, 5}, Occupancy::Occupied);
  const Polyline chain({{0.5, 0.5}, {1.0, 0.5}, {1.0, 1.0}, {0.5, 1.0}});
  CHECK_THROWS_AS(integrate_border(prior, {chain, {0.5, 0.5}, 1.0, BorderKind::Polygon}), MapError);
  CHECK_THROWS_AS(integrate_border(prior, {chain, {0.14, 0.14}, 1.0, BorderKind::Polygon}),
                  MapError);
  CHECK_THROWS_AS(integrate_border(prior, {chain, {0.7, 0.7}, 0.5, BorderKind::Polygon}), MapError);
  CHECK_THROWS_AS(integrate_border(prior, {chain, {5.0, 0.7}, 1.0, BorderKind::Polygon}),
                  OutOfBoundsError);
  IntegrationOptions tight;
  tight.fill_budget = 10;
  CHECK_THROWS_AS(integrate_border(prior, {chain, {0.75, 0.75}, 1.0, BorderKind::Polygon}, tight),
                  MapError);
  const OccupancyGrid copy = prior;
  (void)integrate_border(prior, {chain, {0.75, 0.75}, 1.0, BorderKind::Polygon});
  CHECK(prior == copy);
}

TEST_CASE("integrate_border properties on random grids") {
  std::mt19937_64 rng(13);
  int integrated = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const OccupancyGrid prior = random_grid(rng, 100);
    std::vector<Point2> v;
    const int n = std::uniform_int_distribution<int>(2, 5)(rng);
    while (static_cast<int>(v.size()) < n) {
      const Point2 p = random_point_in(rng, prior, 0.1);
      if (v.empty() || distance(v.back(), p) > 0.2) v.push_back(p);
    }
    const BorderKind kind = trial % 2 ? BorderKind::Polygon : BorderKind::SeparatingCurve;
    VirtualBorder border{Polyline(v), random_point_in(rng, prior), 1.0, kind};
    OccupancyGrid post = prior;
    try {
      post = integrate_border(prior, border);
    } catch (const MapError&) {
      continue;  // seed on the border or outside free space
    }
    ++integrated;

    // Monotone: Occupied cells stay Occupied and every change is to Occupied.
    for (std::size_t i = 0; i < prior.cells().size(); ++i) {
      if (prior.cells()[i] == Occupancy::Occupied) CHECK(post.cells()[i] == Occupancy::Occupied);
      if (post.cells()[i] != prior.cells()[i]) CHECK(post.cells()[i] == Occupancy::Occupied);
    }
    CHECK(integrate_border(post, border) == post);

    // Containment: the filled cells are exactly the oracle flood of prior + border raster.
    OccupancyGrid walls = prior;
    for (const CellIndex& c : border_cells(prior, border)) walls.set(c, Occupancy::Occupied);
    const auto fill = oracle::flood(walls, world_to_cell(prior, border.seed));
    for (std::size_t i = 0; i < prior.cells().size(); ++i) {
      const bool filled = walls.cells()[i] == Occupancy::Free && post.cells()[i] == Occupancy::Occupied;
      CHECK(filled == (fill[i] != 0));
    }
  }
  CHECK(integrated > 40);
}

TEST_CASE("sequential integration feeds the running posterior") {
  const OccupancyGrid prior = free_grid(120, 80);
  const VirtualBorder v1{Polyline({{0.5, 0.5}, {1.0, 0.5}, {1.0, 1.0}, {0.5, 1.0}}), {0.75, 0.75},
                         1.0, BorderKind::Polygon};
  const VirtualBorder v2{Polyline({{2.0, 0.5}, {2.5, 0.5}, {2.5, 1.0}, {2.0, 1.0}}), {2.25, 0.75},
                         1.0, BorderKind::Polygon};
  const OccupancyGrid a = integrate_border(integrate_border(prior, v1), v2);
  const OccupancyGrid b = integrate_border(integrate_border(prior, v2), v1);
  CHECK(a == b);
  const auto area1 = restriction_area(prior, integrate_border(prior, v1));
  const auto area2 = restriction_area(prior, integrate_border(prior, v2));
  CHECK(restriction_area(prior, a).size() == area1.size() + area2.size());
}

TEST_CASE("jsi") {
  const OccupancyGrid prior = free_grid(40, 40);
  const auto square = [&](int c0, int r0, int side) {
    OccupancyGrid g = prior;
    for (int r = r0; r < r0 + side; ++r)
      for (int c = c0; c < c0 + side; ++c) g.set({c, r}, Occupancy::Occupied);
    return g;
  };
  const OccupancyGrid a = square(0, 0, 10);
  CHECK(jsi(prior, a, a) == 1.0);
  CHECK(jsi(prior, prior, prior) == 1.0);
  CHECK(jsi(prior, a, square(20, 20, 10)) == 0.0);
  // Offset by half a side in x: overlap 50, union 150.
  const OccupancyGrid half = square(5, 0, 10);
  CHECK(jsi(prior, a, half) == doctest::Approx(1.0 / 3.0));
  CHECK(jsi(prior, half, a) == jsi(prior, a, half));
  CHECK_THROWS_AS(jsi(prior, a, free_grid(41, 40)), MapError);
}
