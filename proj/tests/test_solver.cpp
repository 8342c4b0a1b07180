#include "doctest.h"

#include <random>

#include "capbound/solver.hpp"

using namespace capbound;

namespace {

// Rectangle [0, w] x [0, 1] with the left and right columns pinned.
std::pair<GridMask, LinearSystem> strip(int cols, int rows) {
  const double h = 1.0 / rows;
  const GridMask m = build_mask(RectDomain{Point(0, 0), Point(cols * h, 1.0)}, h);
  CellSet left, right;
  int lo = 1 << 30, hi = -(1 << 30);
  for (int k : m.cells_with(Cell::Interior)) {
    lo = std::min(lo, m.col(k));
    hi = std::max(hi, m.col(k));
  }
  for (int k : m.cells_with(Cell::Interior)) {
    if (m.col(k) == lo) left.push_back(k);
    if (m.col(k) == hi) right.push_back(k);
  }
  return {m, assemble(m, {{left, 0.0}, {right, 1.0}})};
}

}  // namespace

TEST_CASE("one-dimensional strip solves to a linear ramp") {
  auto [m, sys] = strip(12, 6);
  const auto [x, rep] = solve(sys);
  const Eigen::VectorXd f = sys.expand(x);
  int lo = 1 << 30, hi = 0;
  for (int k : m.cells_with(Cell::Interior)) {
    lo = std::min(lo, m.col(k));
    hi = std::max(hi, m.col(k));
  }
  for (int k : m.cells_with(Cell::Interior))
    CHECK(f[k] == doctest::Approx(double(m.col(k) - lo) / (hi - lo)).epsilon(1e-7));
  // each row holds (hi - lo) edges with difference 1 / (hi - lo)
  const double rows = double(m.count(Cell::Interior)) / (hi - lo + 1);
  CHECK(dirichlet_energy(sys, x) == doctest::Approx(rows / (hi - lo)).epsilon(1e-7));
}

TEST_CASE("iterative and direct solves match the dense oracle") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  const CellSet inner = rasterize_plate(PlateSpec::inner({Disk{Point(0.2, 0.1), 0.15}}), m);
  const LinearSystem sys = assemble(m, {{m.cells_with(Cell::Boundary), 0.0}, {inner, 1.0}});
  REQUIRE(sys.unknowns() <= kDenseOracleCap);
  const Eigen::VectorXd ref = dense_oracle(sys);
  SolveOptions pcg;
  pcg.tol = 1e-12;
  SolveOptions direct;
  direct.method = SolverMethod::Direct;
  CHECK((solve(sys, pcg).first - ref).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((solve(sys, direct).first - ref).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("discrete maximum principle") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  const CellSet inner = rasterize_plate(PlateSpec::inner({Disk{Point(-0.3, 0), 0.1}}), m);
  const LinearSystem sys = assemble(m, {{m.cells_with(Cell::Boundary), 0.0}, {inner, 1.0}});
  const auto [x, rep] = solve(sys);
  CHECK(x.minCoeff() >= 0.0);
  CHECK(x.maxCoeff() <= 1.0);
  CHECK(rep.residual <= 1e-8);
}

TEST_CASE("reflection-symmetric condenser gives a symmetric field") {
  const double h = 0.05;
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, h);
  const CellSet inner = rasterize_plate(PlateSpec::inner({Disk{Point(0, 0), 0.2}}), m);
  const LinearSystem sys = assemble(m, {{m.cells_with(Cell::Boundary), 0.0}, {inner, 1.0}});
  const Eigen::VectorXd f = sys.expand(solve(sys).first);
  for (int k : m.cells_with(Cell::Interior)) {
    const Point c = m.center(k);
    const int r = m.locate(Point(-c.x(), c.y()));
    REQUIRE(r >= 0);
    CHECK(f[k] == doctest::Approx(f[r]).epsilon(1e-6));
  }
}

TEST_CASE("assembly preconditions") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.1);
  const CellSet b = m.cells_with(Cell::Boundary);
  CHECK_THROWS_AS(assemble(m, {{b, 0.0}, {CellSet{b.front()}, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(assemble(m, {{CellSet{}, 0.0}}), PreconditionError);
  CHECK_THROWS_AS(assemble(m, {{m.cells_with(Cell::Exterior), 0.0}}), PreconditionError);
}

TEST_CASE("dense oracle refuses large systems") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.01);
  const LinearSystem sys =
      assemble(m, {{m.cells_with(Cell::Boundary), 0.0},
                   {rasterize_plate(PlateSpec::inner({Disk{Point(0, 0), 0.1}}), m), 1.0}});
  CHECK_THROWS_AS(dense_oracle(sys), TooLarge);
}

TEST_CASE("warm start does not change the solution") {
  const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.05);
  const CellSet inner = rasterize_plate(PlateSpec::inner({Disk{Point(0, 0), 0.2}}), m);
  const LinearSystem sys = assemble(m, {{m.cells_with(Cell::Boundary), 0.0}, {inner, 1.0}});
  SolveOptions cold;
  cold.tol = 1e-12;
  const Eigen::VectorXd a = solve(sys, cold).first;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::VectorXd guess(sys.unknowns());
  for (int i = 0; i < guess.size(); ++i) guess[i] = u(rng);
  SolveOptions warm = cold;
  warm.initial = &guess;
  CHECK((solve(sys, warm).first - a).lpNorm<Eigen::Infinity>() < 1e-9);
}
