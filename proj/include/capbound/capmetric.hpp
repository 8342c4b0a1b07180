#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "capbound/capacity.hpp"
#include "capbound/geometry.hpp"

namespace capbound {

struct OptimizerBudget {
  int vertices = 17;      // polyline size used by the perturbation search
  int iterations = 60;    // perturbation proposals
  int coarse_factor = 2;  // search grid = h * coarse_factor (1 disables)
  int detours = 3;        // boundary-hugging seeds
};

struct MetricConfig {
  DomainSpec domain;
  PlateSpec F;
  Region V;
  double h = 0.02;
  OptimizerBudget budget;
  std::uint64_t seed = 1;
  double tol = 1e-8;           // solver relative residual (iterative method)
  SolverMethod method = SolverMethod::Direct;
  double noise_floor = -1.0;   // < 0 selects 10 * sqrt(tol)
};

struct DistanceEstimate {
  double value = 0.0;
  Polyline curve;
  double term_F = 0.0;         // cp^1/2(F, l \ V)
  double term_boundary = 0.0;  // cp^1/2(boundary, l n V)
  std::string bound_kind = "upper";
  bool below_resolution = false;
};

/// Objective and rasterized data of one curve on one grid.
struct CurveObjective {
  double value = 0.0;
  double term_F = 0.0;
  double term_boundary = 0.0;
};

/// Capacitary distance evaluator with cached grids. Thread-safe.
class CapMetric {
 public:
  explicit CapMetric(MetricConfig config);

  const MetricConfig& config() const { return config_; }
  const GridMask& mask() const { return fine_->mask; }
  double noise_floor() const;

  /// Upper bound of rho(x, y) over the searched curve family. `extra_seeds`
  /// are admitted as candidates (endpoints must be x and y in either order).
  DistanceEstimate rho(const Point& x, const Point& y,
                       const std::vector<Polyline>& extra_seeds = {}) const;

  /// Objective of the shortest-path seed alone (no search).
  DistanceEstimate rho_quick(const Point& x, const Point& y) const;

  /// Objective of the one-cell curve at x: the smallest value any curve
  /// through x can reach at this resolution.
  double point_floor(const Point& x) const;

  /// rho(x, y) minus the larger one-cell floor of its endpoints, clamped at 0.
  double resolved(const Point& x, const Point& y, bool quick = false) const;

  /// Objective of a given curve on the fine grid; nullopt when the curve
  /// leaves the interior cells.
  std::optional<CurveObjective> evaluate(const Polyline& curve) const;

  /// Euclidean grid shortest path between x and y through interior cells.
  Polyline shortest_path(const Point& x, const Point& y) const;

 private:
  struct Level {
    GridMask mask;
    CellSet F;
    CellSet boundary;
    mutable std::mutex mu;
    mutable std::map<CellSet, double> cache_F, cache_b;
  };

  std::optional<CurveObjective> evaluate_on(const Level& level, const Polyline& curve) const;
  double cached_energy(const Level& level, bool boundary_term, const CellSet& cells) const;

  MetricConfig config_;
  mutable std::mutex memo_mu_;
  mutable std::map<std::array<double, 5>, DistanceEstimate> memo_;
  std::unique_ptr<Level> fine_;
  std::unique_ptr<Level> coarse_;
};

/// One-shot convenience wrapper.
DistanceEstimate rho(const Point& x, const Point& y, const MetricConfig& config);

struct TriangleReport {
  double worst_ratio = 0.0;  // max of d(x,y) / (d(x,z) + d(z,y))
  int violations = 0;        // ratios above slack
  std::vector<std::array<double, 3>> values;  // d(x,y), d(x,z), d(z,y)
};
TriangleReport triangle_check(const std::vector<std::array<Point, 3>>& triples,
                              const CapMetric& metric, double slack, int jobs = 1);

struct EquivalenceReport {
  double K = 1.0;
  int used = 0;
  int below_floor = 0;
  std::vector<double> ratios;  // rho1/rho2 over used pairs
};
EquivalenceReport equivalence_check(const CapMetric& m1, const CapMetric& m2,
                                    const std::vector<std::pair<Point, Point>>& pairs,
                                    int jobs = 1);

struct TopologyRow {
  double radius;
  double min_rho;
  double max_rho;
  bool all_positive;
};
struct TopologyReport {
  std::vector<TopologyRow> rows;  // in the order of the requested radii
  bool decreasing = true;         // min rho decreases as the radius decreases
};
TopologyReport topology_check(const Point& x0, const std::vector<double>& radii,
                              const CapMetric& metric, int samples_per_circle = 8, int jobs = 1);

struct AsymptoticMetricRow {
  double eps;
  double rho;
  double ratio;  // rho / eps
};
/// rho((0,0), (eps,0)) for each eps.
std::vector<AsymptoticMetricRow> asymptotic_ratio(const std::vector<double>& eps_list,
                                                  const CapMetric& metric, int jobs = 1);
double ratio_spread(const std::vector<AsymptoticMetricRow>& rows);

}  // namespace capbound
