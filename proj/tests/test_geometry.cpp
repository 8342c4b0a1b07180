#include "doctest.h"

#include <cmath>
#include <numbers>

#include "capbound/geometry.hpp"

using namespace capbound;

TEST_CASE("lattice cells are half-open and centred at multiples of h") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.1);
  const int k = m.locate(Point(0.05, 0.0));
  REQUIRE(k >= 0);
  CHECK(m.center(k).x() == doctest::Approx(0.1));
  CHECK(m.center(m.locate(Point(0.0499, 0.0))).x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.locate(Point(50, 50)) == -1);
}

TEST_CASE("disk mask area converges to pi") {
  for (double h : {0.05, 0.02}) {
    const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, h);
    CHECK(interior_area(m) == doctest::Approx(std::numbers::pi).epsilon(4 * h));
  }
}

TEST_CASE("masks keep one 4-connected interior component with a boundary ring") {
  const GridMask m = build_mask(CombDomain{2}, 1.0 / 27);
  CHECK(is_connected(m.cells_with(Cell::Interior), m, false));
  for (int k : m.cells_with(Cell::Boundary)) {
    bool adj = false;
    m.for_each_neighbor4(k, [&](int n) { adj = adj || m.label(n) == Cell::Interior; });
    CHECK(adj);
  }
}

TEST_CASE("slit cells are not interior") {
  const SlitDiskDomain d{1.0, {Segment{Point(0, 0), Point(1, 0)}}};
  const GridMask m = build_mask(d, 0.05);
  CHECK_FALSE(m.is_interior(m.locate(Point(0.5, 0.0))));
  CHECK(m.is_interior(m.locate(Point(0.5, 0.2))));
  CHECK_FALSE(domain_contains(d, Point(0.5, 0.0)));
  CHECK(domain_contains(d, Point(-0.5, 0.0)));
}

TEST_CASE("features thinner than three cells are rejected") {
  CHECK_THROWS_AS(build_mask(CombDomain{3}, 0.02), UnresolvedFeature);
  CHECK_NOTHROW(build_mask(CombDomain{3}, 1.0 / 81));
  CHECK(comb_channel_cells(3, 1.0 / 81) == doctest::Approx(3.0));
}

TEST_CASE("polygon feature size is the narrowest channel, not the shortest edge") {
  std::vector<Point> circle;
  for (int k = 0; k < 400; ++k) {
    const double t = 2 * std::numbers::pi * k / 400;
    circle.push_back(Point(std::cos(t), 0.5 * std::sin(t)));
  }
  CHECK_NOTHROW(build_mask(PolygonDomain{circle}, 0.02));

  // square with a notch of width 0.04 cut down from the top edge
  const std::vector<Point> notched{{0, 0}, {1, 0}, {1, 1}, {0.52, 1}, {0.52, 0.3}, {0.48, 0.3}, {0.48, 1}, {0, 1}};
  CHECK_THROWS_AS(build_mask(PolygonDomain{notched}, 0.02), UnresolvedFeature);
  CHECK_NOTHROW(build_mask(PolygonDomain{notched}, 0.01));
}

TEST_CASE("polyline invariants") {
  CHECK_THROWS_AS(make_polyline({}), PreconditionError);
  CHECK_THROWS_AS(make_polyline({Point(0, 0), Point(0, 0), Point(1, 0)}), PreconditionError);
  const Polyline p = make_polyline({Point(0, 0), Point(3, 0), Point(3, 4)});
  CHECK(p.length() == doctest::Approx(7.0));
  CHECK(p.reversed().vertices.front() == Point(3, 4));
  CHECK(Polyline{{Point(1, 1)}}.degenerate());
}

TEST_CASE("snowflake vertex count and circumradius") {
  for (int k = 0; k < 4; ++k) {
    const auto v = snowflake_vertices(k);
    CHECK(v.size() == static_cast<std::size_t>(3 * std::pow(4, k)));
    double r = 0;
    for (const auto& p : v) r = std::max(r, p.norm());
    CHECK(r == doctest::Approx(1.0));
  }
}

TEST_CASE("curve rasterization splits cells by V and rejects escapes") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  const Region V = Disk{Point::Zero(), 0.3};
  const CurveCells c = rasterize_curve(make_polyline({Point(-0.6, 0), Point(0.6, 0)}), m, V);
  CHECK_FALSE(c.inside.empty());
  CHECK_FALSE(c.outside.empty());
  for (int k : c.inside) CHECK(contains(V, m.center(k)));
  for (int k : c.outside) CHECK_FALSE(contains(V, m.center(k)));
  CHECK_THROWS_AS(rasterize_curve(make_polyline({Point(0, 0), Point(1.5, 0)}), m, V),
                  CurveEscapesDomain);
}

TEST_CASE("cell set algebra") {
  const CellSet a{1, 2, 5}, b{2, 3, 5};
  CHECK(set_union(a, b) == CellSet{1, 2, 3, 5});
  CHECK(set_intersection(a, b) == CellSet{2, 5});
  CHECK(set_difference(a, b) == CellSet{1});
}

TEST_CASE("boundary distance transform matches the exact disk distance") {
  const double h = 0.02;
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, h);
  const Eigen::VectorXd d = boundary_distance(m);
  CHECK(d[m.locate(Point(0, 0))] == doctest::Approx(1.0).epsilon(2 * h));
  CHECK(d[m.locate(Point(0.5, 0))] == doctest::Approx(0.5).epsilon(4 * h));
}

TEST_CASE("transfer between resolutions keeps the covered region") {
  const GridMask coarse = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.1);
  const GridMask fine = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  const CellSet one{coarse.locate(Point(0, 0))};
  const CellSet t = transfer(one, coarse, fine);
  CHECK(t.size() == 4);
  for (int k : t) CHECK((fine.center(k) - Point(0, 0)).norm() < 0.1);
}

TEST_CASE("plates rasterize to closed-square hits") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  const CellSet p = rasterize_plate(PlateSpec::inner({Disk{Point(0, 0), 0.2}}), m);
  CHECK(is_connected(p, m));
  CHECK(diameter(p, m) == doctest::Approx(0.4).epsilon(0.3));
  CHECK_THROWS_AS(rasterize_plate(PlateSpec::inner({}), m), EmptyPlate);
  CHECK(rasterize_plate(PlateSpec::boundary(), m) == m.cells_with(Cell::Boundary));
}
