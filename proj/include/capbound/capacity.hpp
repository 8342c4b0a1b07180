#pragma once

#include <vector>

#include <Eigen/Core>

#include "capbound/geometry.hpp"
#include "capbound/solver.hpp"

namespace capbound {

struct Condenser {
  DomainSpec domain;
  PlateSpec plate0;
  PlateSpec plate1;
};

/// Discrete extremal function on the finest grid: 0 on plate0, 1 on plate1,
/// NaN on inactive cells.
struct PotentialField {
  GridMask mask;
  Eigen::VectorXd values;
  double h() const { return mask.h(); }
};

struct CapacityEstimate {
  double value = 0.0;
  std::vector<double> resolutions_used;  // coarse to fine
  bool extrapolated = false;
  double error_indicator = 0.0;          // |E(h) - E(h/2)| on the two finest grids
  double finest_energy = 0.0;            // unextrapolated energy on the finest grid
  int iterations = 0;                    // summed over solves
  double wall_time = 0.0;                // seconds
};

/// Energy of the discrete condenser (zero, one) on a fixed mask. The solve
/// always runs in a canonical plate order so that swapping the two sets
/// returns a bit-identical energy. `field` (optional) receives the full mask
/// field oriented as requested.
struct CellCapacity {
  double energy = 0.0;
  SolveReport report;
};
CellCapacity cell_capacity(const GridMask& mask, const CellSet& zero, const CellSet& one,
                           const SolveOptions& options = {}, Eigen::VectorXd* field = nullptr,
                           const Eigen::VectorXd* warm_field = nullptr);

/// Capacity at h/2^refine, Richardson-extrapolated (order 1) from the two
/// finest grids when refine >= 1.
std::pair<CapacityEstimate, PotentialField> condenser_capacity(const Condenser& c, double h,
                                                               int refine,
                                                               const SolveOptions& options = {});

/// cp(boundary, E; domain).
CapacityEstimate set_capacity(const std::vector<Shape>& E, const DomainSpec& domain, double h,
                              int refine, const SolveOptions& options = {});

struct AsymptoticRow {
  double eps;
  double capacity;
  double ratio;
  double error_indicator;
};

/// cp((-1,-1/2], [0,eps]; disk(0,3)) with ratio cp / ln(1+eps).
std::vector<AsymptoticRow> asymptotic_lower_suite(const std::vector<double>& eps_list, double h,
                                                  int refine);
/// cp(boundary, [0,eps]; disk(0,1)) with ratio cp * ln(1/eps).
std::vector<AsymptoticRow> asymptotic_upper_suite(const std::vector<double>& eps_list, double h,
                                                  int refine);

/// max/min of the ratio column.
double ratio_spread(const std::vector<AsymptoticRow>& rows);
/// max |ratio/mean - 1| of the ratio column.
double ratio_deviation(const std::vector<AsymptoticRow>& rows);

struct ComparabilityReport {
  double K = 1.0;
  std::vector<double> ratios;  // cp(F01,F1)/cp(F02,F1) per sample
};

/// K = max over F1 samples of max(cp(F01,F1)/cp(F02,F1), inverse). The three
/// plates must be mutually disjoint at the working resolution.
ComparabilityReport comparability_check(const PlateSpec& f01, const PlateSpec& f02,
                                        const std::vector<PlateSpec>& f1_samples,
                                        const DomainSpec& domain, double h, int refine);

/// Fine-grid warm start from a coarse field (nearest coarse cell).
Eigen::VectorXd prolong(const GridMask& coarse, const Eigen::VectorXd& coarse_field,
                        const GridMask& fine);

}  // namespace capbound
