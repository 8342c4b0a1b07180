#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "capbound/boundary.hpp"
#include "capbound/capmetric.hpp"
#include "capbound/geometry.hpp"

namespace capbound {

/// Cell-centre samples of a function on the interior cells of a mask.
struct GridFunction {
  DomainSpec domain;
  GridMask mask;
  Eigen::VectorXd values;  // per mask cell, NaN off interior cells
  double energy = 0.0;     // sum over interior 4-edges of (du)^2
  std::string tag;

  double h() const { return mask.h(); }
  /// Value of the interior cell containing p, NaN elsewhere.
  double at(const Point& p) const;
  /// Max minus min over interior cells.
  double oscillation() const;
};

/// Discrete Dirichlet energy (equals sum |grad u|^2 * cell area).
double grid_energy(const GridMask& mask, const Eigen::VectorXd& values);

using Formula = std::function<double(const Point&)>;

/// Samples `f` at interior cell centres. Throws InfiniteEnergy on
/// non-finite samples.
GridFunction sample(const DomainSpec& domain, double h, const Formula& f, std::string tag);

GridFunction scaled(const GridFunction& u, double alpha);
/// Pointwise sum; masks must agree.
GridFunction sum(const GridFunction& u, const GridFunction& v);

/// Catalog: coordinate_x, harmonic_re_z, constant, sqrt_singularity
/// (Re sqrt(z0 - z)), radial_log (ln |z - z0|). z0 is the singular boundary
/// point of the last two.
Formula catalog_formula(const std::string& tag, const Point& z0 = Point(1, 0));
std::vector<std::string> catalog_tags();

struct EnergyRefinement {
  std::vector<double> h;       // coarse to fine
  std::vector<double> energy;
  bool divergent = false;
};

/// Energies on three halving levels starting from the coarsest of 4h, 2h, h, ...
/// that resolves the domain. Divergent when a refinement step grows the energy
/// by more than 1.5x, or when the increments fail to contract (second
/// increment above 0.75 of the first and above 5% of the energy).
EnergyRefinement energy_refinement(const DomainSpec& domain, double h, const Formula& f);

/// Sampled catalog function at h; InfiniteEnergy when the energy diverges
/// under refinement.
GridFunction make_function(const DomainSpec& domain, const std::string& tag, double h,
                           const Point& z0 = Point(1, 0));

enum class LuzinStatus { Success, BudgetExceeded };
std::string to_string(LuzinStatus s);

struct LuzinReport {
  double eps = 0.0;
  CellSet U_cells;              // on `mask`
  GridMask mask;
  double cap_U = 0.0;
  double error_indicator = 0.0;
  // euclidean: max slope |du|/|x-y| over retained pairs within the lattice
  // radius; capacitary: max |du| over retained sample pairs with resolved
  // rho at most the radius.
  double modulus = 0.0;
  std::string metric_kind;
  LuzinStatus status = LuzinStatus::Success;
  int violations = 0;           // violating pairs before removal
};

struct WeakLuzinOptions {
  double kappa = 4.0;     // slope threshold in units of the RMS gradient
  int radius_cells = 4;   // pair search radius on the lattice
  int refine = 1;         // capacity refinement of the exceptional set
};

/// Greedily removes the cell of largest local slope until every retained
/// pair within the lattice radius has slope <= kappa * RMS gradient. cap_U is
/// the capacity of the removed cells against a concentric circle of radius
/// twice the domain's half-extent. BudgetExceeded when cap_U > eps + error indicator.
LuzinReport weak_luzin(const GridFunction& u, double eps, const WeakLuzinOptions& options = {});

struct StrongLuzinOptions {
  double radius = 0.08;        // resolved-rho radius of the continuity test
  double tau_fraction = 0.1;   // |du| threshold as a fraction of the oscillation
  int samples = 150;           // target number of band samples
  int neighbours = 3;          // candidate partners per sample
  double band = 10.0;          // sample band width in cells
};

/// Band samples of the metric mask; pairs with |du| > tau among each sample's
/// nearest candidates violate when their quick resolved rho is <= radius.
/// Greedy removal of the sample in most violations; U is the union of the
/// removed samples' stride blocks and cap_U = cp(F, U).
LuzinReport strong_luzin(const GridFunction& u, double eps, const CapMetric& metric,
                         const StrongLuzinOptions& options = {}, int jobs = 1);

enum class TraceVerdict { Consistent, Inconsistent };
std::string to_string(TraceVerdict v);

struct ElementTrace {
  std::string label;
  std::vector<std::vector<double>> samples;  // u along each (extended) member
  std::vector<double> member_traces;         // average of the last samples
  double spread = 0.0;
  TraceVerdict verdict = TraceVerdict::Consistent;
  // Inconsistent elements only, per depth n: cp(F, T_n), where T_n holds the
  // probes within the depth-n member radius of the deepest point.
  std::vector<double> trapping_radius;
  std::vector<double> trapping_capacity;
};

struct TraceReport {
  std::vector<ElementTrace> elements;
};

struct TraceOptions {
  double tol = 5e-2;
  int average = 3;
  RealizationOptions probes;
};

/// Extendable members are continued down to the resolution of u before
/// sampling. Trapping sets use quick rho upper bounds on the metric grid.
TraceReport trace(const GridFunction& u, const std::vector<BoundaryElementEstimate>& elements,
                  const CapMetric& metric, const TraceOptions& options = {}, int jobs = 1);

}  // namespace capbound
