#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "xe/geometry.hpp"
#include "xe/metric.hpp"

using namespace xe;
using namespace xe::geometry;

namespace {
Grid make_grid_2d(int n, double half = 1.0) {
  return Grid(BoundingBox(2, {-half, -half, 0}, {half, half, 0}, {n, n, 1}));
}
}  // namespace

TEST_CASE("rasterize: disk cell count matches the area") {
  Grid g = make_grid_2d(200);  // h = 0.01
  auto mask = rasterize(*make_ball({0, 0, 0}, 0.5), g);
  double est = double(count(mask)) * g.h() * g.h();
  double area = oracle::kPi * 0.25;
  CHECK(std::abs(est - area) / area < 0.02);
}

TEST_CASE("rasterize: halving h moves a smooth shape's measure by O(h)") {
  double area = oracle::kPi * 0.25;
  Grid g1 = make_grid_2d(100);
  Grid g2 = make_grid_2d(200);
  auto m1 = rasterize(*make_ball({0, 0, 0}, 0.5), g1);
  auto m2 = rasterize(*make_ball({0, 0, 0}, 0.5), g2);
  double e1 = double(count(m1)) * g1.h() * g1.h();
  double e2 = double(count(m2)) * g2.h() * g2.h();
  // Perimeter-sized bound on the drift between resolutions.
  CHECK(std::abs(e1 - e2) <= 4.0 * oracle::kPi * g1.h());
  CHECK(std::abs(e2 - area) <= 4.0 * oracle::kPi * g2.h());
}

TEST_CASE("rasterize: complement of a half-space is the exact node predicate") {
  Grid g = make_grid_2d(64);
  auto shape = make_complement(make_halfspace({1, 0, 0}, 0.0));
  auto mask = rasterize(*shape, g);
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    bool expect = g.position(i)[0] > 0.0;
    CHECK(bool(mask[std::size_t(i)]) == expect);
  }
}

TEST_CASE("rasterize: exponential cusp spine is axis-thin below 1/ln(1/h)") {
  Grid g(BoundingBox(3, {-0.5, -0.5, 0.0}, {0.5, 0.5, 1.0}, {32, 32, 32}));
  const double h = g.h();
  auto spine = make_spine_exp(2, {0, 0, 0}, 1.0, 1.0, 1.0);
  auto mask = rasterize(*spine, g);
  CHECK(count(mask) > 0);
  const double t_thin = 1.0 / std::log(1.0 / h);
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    if (!mask[std::size_t(i)]) continue;
    Vec p = g.position(i);
    CHECK(p[2] >= h - 1e-14);  // nothing at or below the tip layer
    if (p[2] < t_thin) {
      // Sub-h width: only the axis line can be inside.
      CHECK(std::abs(p[0]) < 1e-14);
      CHECK(std::abs(p[1]) < 1e-14);
    }
  }
}

TEST_CASE("compact_obstacle") {
  Grid g = make_grid_2d(128);  // h = 1/64
  auto family = fields::FieldFamily::euclidean(2);
  auto D = make_ball({0, 0, 0}, 0.9);

  SUBCASE("punctured disk leaves the single node at y") {
    auto omega =
        make_difference(make_ball({0, 0, 0}, 0.6), make_point_cell({0, 0, 0}));
    auto dom = make_domain(g, *D, *omega);
    std::int64_t y = snap_boundary_point(dom, {0, 0, 0});
    CHECK(g.position(y)[0] == doctest::Approx(0.0));
    auto dist = metric::control_distance_from(family, {y}, g);
    auto K = compact_obstacle(dom, y, 0.1, dist.values);
    CHECK(K.size() == 1);
    CHECK(K[0] == y);
  }

  SUBCASE("half-space obstacle fills about half the ball") {
    auto omega = make_difference(make_ball({0, 0, 0}, 0.6),
                                 make_halfspace({1, 0, 0}, 0.0));
    auto dom = make_domain(g, *D, *omega);
    std::int64_t y = snap_boundary_point(dom, {0, 0, 0});
    auto dist = metric::control_distance_from(family, {y}, g);
    double rho = 0.1;
    auto K = compact_obstacle(dom, y, rho, dist.values);
    std::int64_t ball_n = 0;
    for (std::int64_t i = 0; i < g.n_nodes; ++i)
      if (dist.values[std::size_t(i)] <= rho) ++ball_n;
    double ratio = double(K.size()) / double(ball_n);
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.1));
  }

  SUBCASE("nested radii give nested obstacles") {
    auto omega = make_difference(make_ball({0, 0, 0}, 0.6),
                                 make_halfspace({1, 0, 0}, 0.0));
    auto dom = make_domain(g, *D, *omega);
    std::int64_t y = snap_boundary_point(dom, {0, 0, 0});
    auto dist = metric::control_distance_from(family, {y}, g);
    auto K1 = compact_obstacle(dom, y, 0.05, dist.values);
    auto K2 = compact_obstacle(dom, y, 0.1, dist.values);
    auto K3 = compact_obstacle(dom, y, 0.2, dist.values);
    auto subset = [](const std::vector<std::int64_t>& a,
                     const std::vector<std::int64_t>& b) {
      for (std::int64_t i : a)
        if (std::find(b.begin(), b.end(), i) == b.end()) return false;
      return true;
    };
    CHECK(subset(K1, K2));
    CHECK(subset(K2, K3));
  }

  SUBCASE("ball escaping D raises a radius error") {
    auto omega = make_difference(make_ball({0, 0, 0}, 0.6),
                                 make_halfspace({1, 0, 0}, 0.0));
    auto dom = make_domain(g, *D, *omega);
    std::int64_t y = snap_boundary_point(dom, {0, 0, 0});
    auto dist = metric::control_distance_from(family, {y}, g);
    CHECK_THROWS_AS(compact_obstacle(dom, y, 1.2, dist.values), GeometryError);
  }
}

TEST_CASE("domain construction enforces compact containment") {
  Grid g = make_grid_2d(64);
  auto D = make_ball({0, 0, 0}, 0.6);
  // Omega flush with D: rejected.
  CHECK_THROWS_AS(make_domain(g, *D, *make_ball({0, 0, 0}, 0.6)), GeometryError);
  // Proper margin passes and produces a boundary.
  auto dom = make_domain(g, *D, *make_ball({0, 0, 0}, 0.4));
  CHECK(!dom.boundary_nodes.empty());
}

TEST_CASE("malformed shape trees are configuration errors") {
  CHECK_THROWS_AS(make_ball({0, 0, 0}, -1.0), ConfigError);
  CHECK_THROWS_AS(make_union({}), ConfigError);
  CHECK_THROWS_AS(make_halfspace({0, 0, 0}, 0.0), ConfigError);
}
