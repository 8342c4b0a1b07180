#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "capbound/capmetric.hpp"

namespace capbound {

/// Interior points indexed by depth, Euclidean distance to the boundary
/// strictly decreasing.
struct BoundarySequence {
  std::vector<Point> points;
  std::string generator;
  // Geometric rule target + start * rate^-n * direction behind the points;
  // rate == 0 marks a sequence that cannot be continued.
  Point target = Point::Zero();
  Point direction = Point::Zero();
  double start = 0.0;
  double rate = 0.0;
};

/// Continues a geometric sequence while each new point falls in a fresh
/// interior cell of `mask`.
BoundarySequence extend(const BoundarySequence& seq, const GridMask& mask);

/// target + d_n * direction with d_n = start * rate^-n, n = 0..depth-1.
/// `direction` is a unit vector pointing from the target into the domain.
BoundarySequence approach_sequence(const Point& target, const Point& direction, double start,
                                   int depth, double rate, std::string generator);
/// center + radius * (1 - rate^-n) * (cos theta, sin theta), n = 1..depth.
BoundarySequence radial_sequence(const Point& center, double radius, double theta, int depth,
                                 double rate = 2.0);
/// Comb channel points (x, 1.5 * 3^-n), n = 1..levels.
BoundarySequence comb_channel_sequence(double x, int levels);
/// Cantor-fan sector `sector` (0..3 at depth 2) along its bisector toward the
/// origin; the last point is the cell (+-h, +-h).
BoundarySequence fan_sector_sequence(int sector, int depth, double h);

/// Greatest resolved distance over pairs of points at depth >= i, for each i,
/// plus the full resolved-distance matrix.
struct CauchyProfile {
  std::vector<double> tail_max;
  Eigen::MatrixXd pairwise;
  bool decreasing = true;  // strict decrease from first to last depth, or all zero
};
CauchyProfile cauchy_profile(const BoundarySequence& seq, const CapMetric& metric, int jobs = 1);

enum class Verdict { Same, Distinct, Inconclusive };
std::string to_string(Verdict v);

struct SameElementReport {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<double> cross;  // resolved distance between points of equal depth
  std::vector<double> interleaved_profile;  // filled unless DISTINCT was decided first
};

/// SAME if the interleaved sequence profile is below tol at the deepest depth;
/// DISTINCT if the last three cross distances all exceed 3 * tol.
SameElementReport same_element(const BoundarySequence& s1, const BoundarySequence& s2,
                               const CapMetric& metric, double tol, int jobs = 1);

struct BoundaryElementEstimate {
  std::string label;
  std::vector<BoundarySequence> members;
  Eigen::MatrixXd deepest_distances;  // resolved distances between member deepest points
  std::vector<double> cauchy_profile; // of the first member
  CellSet realization_cells;
  Point deepest = Point::Zero();      // deepest point of the first member
};

/// Builds an element from member sequences that must be pairwise SAME at tol.
BoundaryElementEstimate make_element(std::string label, std::vector<BoundarySequence> members,
                                     const CapMetric& metric, double tol, int jobs = 1);

struct RealizationOptions {
  double band = 10.0;  // probe band width, in cells
  int stride = 3;      // probe subsampling on the lattice
  double core = 3.0;   // every interior cell within this many cells of the deepest point is a probe
  double window = 0.0; // > 0 keeps only probes within this Euclidean distance of the deepest point
};

struct RealizationReport {
  CellSet cells;                 // intersection over eps
  std::vector<CellSet> per_eps;  // closure of each capacitary disk
  CellSet probes;
  Eigen::VectorXd probe_distance;  // resolved distance of each probe to the deepest point
};

/// Interior cells within `band` cells of the boundary on the stride lattice,
/// plus the core cells around `deepest`.
CellSet realization_probes(const GridMask& mask, const Point& deepest,
                           const RealizationOptions& options = {});

/// Capacitary disks D(eps) = probes with resolved distance < eps to the
/// element's deepest point; closure adds 8-adjacent non-interior cells.
RealizationReport realization(const BoundaryElementEstimate& element,
                              const std::vector<double>& eps_list, const CapMetric& metric,
                              const RealizationOptions& options = {}, int jobs = 1);

struct CombRow {
  int level;
  double y;
  double rho;       // upper bound of rho((x1,y),(x2,y))
  double resolved;  // rho minus the one-cell floors
};
std::vector<CombRow> comb_collapse_test(int levels, double x1, double x2, const CapMetric& metric,
                                        int jobs = 1);

/// Largest x-extent of the cells (centre to centre).
double x_extent(const CellSet& cells, const GridMask& mask);

}  // namespace capbound
