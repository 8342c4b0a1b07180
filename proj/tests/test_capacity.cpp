#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "capbound/capacity.hpp"

using namespace capbound;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// Radial oracle: u = ln(t/r) / ln(R/r) has energy 2 pi / ln(R/r).
double annulus_oracle(double R, double r) { return kTwoPi / std::log(R / r); }

}  // namespace

TEST_CASE("annulus capacity approaches the radial oracle") {
  const Condenser c{DiskDomain{Point::Zero(), 1.0}, PlateSpec::boundary(),
                    PlateSpec::inner({Disk{Point::Zero(), 0.4}})};
  const auto [est, field] = condenser_capacity(c, 0.04, 1);
  CHECK(est.extrapolated);
  CHECK(est.resolutions_used.size() == 2);
  CHECK(est.value == doctest::Approx(annulus_oracle(1.0, 0.4)).epsilon(0.03));
  CHECK(est.error_indicator > 0);
  CHECK(field.h() == doctest::Approx(0.02));
}

TEST_CASE("extrapolation is 2 E(h/2) - E(h)") {
  const Condenser c{DiskDomain{Point::Zero(), 1.0}, PlateSpec::boundary(),
                    PlateSpec::inner({Disk{Point(0.1, 0), 0.3}})};
  const double coarse = condenser_capacity(c, 0.05, 0).first.value;
  const auto fine = condenser_capacity(c, 0.05, 1).first;
  CHECK(fine.value == doctest::Approx(2 * fine.finest_energy - coarse).epsilon(1e-9));
  CHECK(fine.error_indicator == doctest::Approx(std::abs(fine.finest_energy - coarse)));
}

TEST_CASE("plate swap symmetry is exact") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  const CellSet a = rasterize_plate(PlateSpec::inner({Disk{Point(-0.4, 0), 0.15}}), m);
  const CellSet b = rasterize_plate(PlateSpec::inner({Rect{Point(0.2, -0.2), Point(0.5, 0.3)}}), m);
  CHECK(cell_capacity(m, a, b).energy == cell_capacity(m, b, a).energy);
}

TEST_CASE("randomized property suite: positivity, monotonicity, subadditivity") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  const CellSet boundary = m.cells_with(Cell::Boundary);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> pos(-0.5, 0.5), rad(0.05, 0.15);
  for (int trial = 0; trial < 10; ++trial) {
    const Disk d1{Point(pos(rng), pos(rng)), rad(rng)};
    const Disk d2{Point(pos(rng), pos(rng)), rad(rng)};
    const CellSet e1 = rasterize_plate(PlateSpec::inner({d1}), m);
    const CellSet e2 = rasterize_plate(PlateSpec::inner({d2}), m);
    const CellSet grown = rasterize_plate(PlateSpec::inner({Disk{d1.center, d1.radius + 0.1}}), m);
    const double c1 = cell_capacity(m, boundary, e1).energy;
    const double c2 = cell_capacity(m, boundary, e2).energy;
    const double c12 = cell_capacity(m, boundary, set_union(e1, e2)).energy;
    CHECK(c1 > 0);
    CHECK(cell_capacity(m, boundary, grown).energy >= c1);
    CHECK(c12 >= std::max(c1, c2) * (1 - 1e-9));
    CHECK(std::sqrt(c12) <= (std::sqrt(c1) + std::sqrt(c2)) * 1.05);
  }
}

TEST_CASE("set capacity of a centred disk") {
  const double eps = 0.2;
  const CapacityEstimate e =
      set_capacity({Disk{Point::Zero(), eps}}, DiskDomain{Point::Zero(), 1.0}, 0.02, 1);
  CHECK(e.value == doctest::Approx(kTwoPi / std::log(1 / eps)).epsilon(0.05));
}

TEST_CASE("asymptotic suites have the expected ordering") {
  const auto lower = asymptotic_lower_suite({0.1, 0.2}, 0.025, 0);
  REQUIRE(lower.size() == 2);
  CHECK(lower[0].capacity < lower[1].capacity);
  CHECK(lower[0].ratio == doctest::Approx(lower[0].capacity / std::log(1.1)));
  const auto upper = asymptotic_upper_suite({0.1, 0.2}, 0.025, 0);
  CHECK(upper[0].capacity < upper[1].capacity);
  CHECK(upper[1].ratio == doctest::Approx(upper[1].capacity * std::log(5.0)));
  CHECK(ratio_spread(upper) >= 1.0);
}

TEST_CASE("comparability of disjoint plates") {
  const DomainSpec d = DiskDomain{Point::Zero(), 1.0};
  const PlateSpec f01 = PlateSpec::inner({Disk{Point(-0.5, 0), 0.1}});
  const PlateSpec f02 = PlateSpec::inner({Disk{Point(-0.5, 0.3), 0.1}});
  const std::vector<PlateSpec> f1{PlateSpec::inner({Disk{Point(0.5, 0), 0.1}}),
                                  PlateSpec::inner({Disk{Point(0.4, -0.4), 0.1}})};
  const ComparabilityReport r = comparability_check(f01, f02, f1, d, 0.05, 0);
  CHECK(r.ratios.size() == 2);
  CHECK(r.K >= 1.0);
  CHECK(r.K < 2.0);
  CHECK_THROWS_AS(comparability_check(f01, f01, {f01}, d, 0.05, 0), PreconditionError);
}

TEST_CASE("prolongation copies the containing coarse cell") {
  const GridMask coarse = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.1);
  const GridMask fine = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  Eigen::VectorXd f(coarse.size());
  for (int k = 0; k < coarse.size(); ++k) f[k] = coarse.center(k).x();
  const Eigen::VectorXd p = prolong(coarse, f, fine);
  const int k = fine.locate(Point(0.3, 0.0));
  CHECK(std::abs(p[k] - 0.3) <= 0.05 + 1e-12);
}
