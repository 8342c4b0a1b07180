#include "doctest.h"

#include <cmath>
#include <numbers>

#include "capbound/boundary.hpp"

using namespace capbound;

namespace {

const CapMetric& disk_metric() {
  static const CapMetric m(MetricConfig{DiskDomain{Point::Zero(), 1.0},
                                        PlateSpec::inner({Disk{Point::Zero(), 0.1}}),
                                        Region{Disk{Point::Zero(), 0.25}}, 1.0 / 32});
  return m;
}

}  // namespace

TEST_CASE("sequence generators") {
  const BoundarySequence s = approach_sequence(Point(1, 0), Point(-1, 0), 0.5, 4, 2.0, "t");
  REQUIRE(s.points.size() == 4);
  CHECK(s.points[3].x() == doctest::Approx(1 - 0.0625));
  CHECK_THROWS_AS(approach_sequence(Point(1, 0), Point(-1, 0), 0.5, 0, 2.0, "t"), PreconditionError);
  CHECK_THROWS_AS(approach_sequence(Point(1, 0), Point(-1, 0), 0.5, 3, 1.0, "t"), PreconditionError);

  const BoundarySequence c = comb_channel_sequence(-0.5, 3);
  REQUIRE(c.points.size() == 3);
  CHECK(c.points[2].y() == doctest::Approx(1.5 / 27));
  CHECK(c.rate == 0.0);

  const BoundarySequence f = fan_sector_sequence(1, 2, 1.0 / 64);
  CHECK(f.points.back() == Point(-1.0 / 64, 1.0 / 64));
  CHECK_THROWS_AS(fan_sector_sequence(4, 2, 0.01), PreconditionError);
}

TEST_CASE("distance to the boundary decreases along radial sequences") {
  const BoundarySequence s = radial_sequence(Point::Zero(), 1.0, 0.7, 5, 2.0);
  for (std::size_t i = 1; i < s.points.size(); ++i)
    CHECK(1 - s.points[i].norm() < 1 - s.points[i - 1].norm());
}

TEST_CASE("extension continues geometric sequences until the cells repeat") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 1.0 / 64);
  const BoundarySequence s = radial_sequence(Point::Zero(), 1.0, 0.0, 3, 2.0);
  const BoundarySequence e = extend(s, m);
  CHECK(e.points.size() > s.points.size());
  for (const auto& p : e.points) CHECK(m.is_interior(m.locate(p)));
  const BoundarySequence comb = comb_channel_sequence(0.5, 2);
  CHECK(extend(comb, m).points.size() == comb.points.size());
}

TEST_CASE("radial sequences toward different boundary points are DISTINCT") {
  const CapMetric& m = disk_metric();
  const auto a = radial_sequence(Point::Zero(), 1.0, 0.0, 4, 2.0);
  const auto b = radial_sequence(Point::Zero(), 1.0, std::numbers::pi / 2, 4, 2.0);
  const SameElementReport r = same_element(a, b, m, 0.08);
  CHECK(r.verdict == Verdict::Distinct);
  CHECK(r.cross.size() == 4);
}

TEST_CASE("two rates toward one boundary point are SAME") {
  const CapMetric& m = disk_metric();
  const auto a = radial_sequence(Point::Zero(), 1.0, 1.0, 4, 2.0);
  const auto b = radial_sequence(Point::Zero(), 1.0, 1.0, 3, 3.0);
  CHECK(same_element(a, b, m, 0.08).verdict == Verdict::Same);
  const BoundaryElementEstimate el = make_element("e", {a, b}, m, 0.08);
  CHECK(el.deepest == a.points.back());
  CHECK(el.deepest_distances.rows() == 2);
  CHECK(to_string(Verdict::Inconclusive) == "INCONCLUSIVE");
}

TEST_CASE("non-SAME members are rejected") {
  const CapMetric& m = disk_metric();
  const auto a = radial_sequence(Point::Zero(), 1.0, 0.0, 4, 2.0);
  const auto b = radial_sequence(Point::Zero(), 1.0, std::numbers::pi, 4, 2.0);
  CHECK_THROWS_AS(make_element("e", {a, b}, m, 0.08), PreconditionError);
}

TEST_CASE("probe window and core") {
  const GridMask& mask = disk_metric().mask();
  RealizationOptions o;
  const CellSet all = realization_probes(mask, Point(0.9, 0), o);
  o.window = 0.3;
  const CellSet near = realization_probes(mask, Point(0.9, 0), o);
  CHECK(near.size() < all.size());
  for (int k : near) CHECK((mask.center(k) - Point(0.9, 0)).norm() <= 0.3);
  CHECK(std::binary_search(near.begin(), near.end(), mask.locate(Point(0.9, 0))));
}

TEST_CASE("x extent") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.1);
  CHECK(x_extent({}, m) == 0.0);
  CHECK(x_extent({m.locate(Point(-0.5, 0)), m.locate(Point(0.3, 0.2))}, m) == doctest::Approx(0.8));
}
