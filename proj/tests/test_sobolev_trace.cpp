#include "doctest.h"

#include <cmath>
#include <numbers>

#include "capbound/sobolev_trace.hpp"

using namespace capbound;

namespace {

const DomainSpec kDisk = DiskDomain{Point::Zero(), 1.0};

}  // namespace

TEST_CASE("energy of a linear function counts the horizontal edges") {
  const GridFunction u = make_function(kDisk, "coordinate_x", 0.02);
  int edges = 0;
  for (int k : u.mask.cells_with(Cell::Interior))
    if (u.mask.col(k) + 1 < u.mask.nx() && u.mask.is_interior(k + 1)) ++edges;
  CHECK(u.energy == doctest::Approx(edges * 0.02 * 0.02).epsilon(1e-9));
  CHECK(u.energy == doctest::Approx(std::numbers::pi).epsilon(0.05));
  CHECK(u.oscillation() == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::isnan(u.at(Point(5, 5))));
  CHECK(u.at(Point(0.3, 0.1)) == doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("energy is quadratic and the constant costs nothing") {
  const GridFunction u = make_function(kDisk, "harmonic_re_z", 0.05);
  CHECK(scaled(u, 3.0).energy == doctest::Approx(9 * u.energy));
  CHECK(make_function(kDisk, "constant", 0.05).energy == 0.0);
  const GridFunction v = make_function(kDisk, "coordinate_x", 0.05);
  CHECK(sum(u, scaled(v, -1)).energy == doctest::Approx(0.0).epsilon(1e-12));
  const GridFunction other = make_function(DiskDomain{Point::Zero(), 0.9}, "constant", 0.05);
  CHECK_THROWS(sum(u, other));
}

TEST_CASE("catalog") {
  CHECK(catalog_tags().size() == 5);
  CHECK_THROWS_AS(catalog_formula("nope"), ValidationError);
  const Formula s = catalog_formula("sqrt_singularity");
  CHECK(s(Point(0, 0)) == doctest::Approx(1.0));
  CHECK(s(Point(1, 0)) == doctest::Approx(0.0));
}

TEST_CASE("log singularity has diverging energy, the square root does not") {
  CHECK_THROWS_AS(make_function(kDisk, "radial_log", 1.0 / 32), InfiniteEnergy);
  const EnergyRefinement r = energy_refinement(kDisk, 1.0 / 32, catalog_formula("sqrt_singularity"));
  CHECK_FALSE(r.divergent);
  CHECK(r.h.size() == 3);
  const EnergyRefinement l = energy_refinement(kDisk, 1.0 / 32, catalog_formula("radial_log"));
  CHECK(l.divergent);
  CHECK(l.energy.back() > l.energy.front());
}

TEST_CASE("sampling rejects non-finite values") {
  CHECK_THROWS_AS(sample(kDisk, 0.05, [](const Point&) { return NAN; }, "nan"), InfiniteEnergy);
}

TEST_CASE("weak Luzin: U is fixed, the budget decides the status") {
  const GridFunction u = make_function(kDisk, "sqrt_singularity", 1.0 / 32);
  const LuzinReport big = weak_luzin(u, 10.0);
  CHECK(big.status == LuzinStatus::Success);
  CHECK(big.cap_U <= big.eps + big.error_indicator);
  CHECK_FALSE(big.U_cells.empty());
  const LuzinReport tiny = weak_luzin(u, 0.0);
  CHECK(tiny.U_cells == big.U_cells);
  CHECK(tiny.status == LuzinStatus::BudgetExceeded);
  CHECK(to_string(LuzinStatus::BudgetExceeded) == "BUDGET_EXCEEDED");
}

TEST_CASE("harmonic trace on the disk is cos theta") {
  const double h = 1.0 / 64;
  const CapMetric metric(MetricConfig{kDisk, PlateSpec::inner({Disk{Point::Zero(), 0.1}}),
                                      Region{Disk{Point::Zero(), 0.25}}, 1.0 / 16});
  const GridFunction u = make_function(kDisk, "harmonic_re_z", h);
  std::vector<BoundaryElementEstimate> els;
  for (double theta : {0.0, 2.0}) {
    BoundaryElementEstimate e;
    e.label = "t";
    e.members = {radial_sequence(Point::Zero(), 1.0, theta, 3, 2.0)};
    e.deepest = e.members.front().points.back();
    els.push_back(e);
  }
  const TraceReport r = trace(u, els, metric);
  REQUIRE(r.elements.size() == 2);
  CHECK(r.elements[0].member_traces[0] == doctest::Approx(1.0).epsilon(0.03));
  CHECK(r.elements[1].member_traces[0] == doctest::Approx(std::cos(2.0)).epsilon(0.03));
  CHECK(r.elements[0].verdict == TraceVerdict::Consistent);
  CHECK(r.elements[0].trapping_capacity.empty());
}
