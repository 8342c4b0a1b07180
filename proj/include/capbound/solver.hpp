#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "capbound/geometry.hpp"

namespace capbound {

/// Dirichlet data: every cell in `cells` is pinned to `value`.
struct Constraint {
  CellSet cells;
  double value;
};

/// 5-point Laplacian over the active cells of a mask (interior cells plus
/// constrained cells). Edges to inactive cells are dropped, which is the
/// mirror-ghost Neumann condition.
struct LinearSystem {
  enum State : std::uint8_t { Inactive = 0, Free = 1, Fixed = 2 };

  int nx = 0;                          // mask row stride
  std::vector<std::uint8_t> state;     // per mask cell
  std::vector<int> free_index;         // mask cell -> unknown, -1 if not free
  std::vector<int> free_cells;         // unknown -> mask cell
  Eigen::VectorXd fixed_value;         // per mask cell, meaningful where Fixed
  std::vector<std::array<int, 4>> nbr; // unknown -> free neighbour unknowns (-1 pads)
  Eigen::VectorXd diag;                // active neighbour count
  Eigen::VectorXd rhs;                 // sum of fixed neighbour values
  double min_value = 0.0, max_value = 0.0;

  int unknowns() const { return static_cast<int>(free_cells.size()); }
  /// y = A x
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  /// Full mask field from free values (fixed cells filled, inactive = NaN).
  Eigen::VectorXd expand(const Eigen::VectorXd& free_values) const;
  /// Restriction of a mask field to the unknowns.
  Eigen::VectorXd restrict_field(const Eigen::VectorXd& field) const;
};

/// Throws PreconditionError when constraint sets overlap, touch exterior
/// cells, or are all empty.
LinearSystem assemble(const GridMask& mask, const std::vector<Constraint>& constraints);

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;   // final relative residual
  double wall_time = 0.0;  // seconds
};

enum class SolverMethod {
  PCG,     // Jacobi-preconditioned conjugate gradients (matrix free)
  Direct,  // sparse LDL^T factorization; used where many small solves dominate
};

struct SolveOptions {
  SolverMethod method = SolverMethod::PCG;
  double tol = 1e-8;
  int max_iterations = 0;                  // 0 picks a size-dependent cap
  const Eigen::VectorXd* initial = nullptr; // optional warm start (unknowns)
};

/// Returns the unknowns, clamped to [min constraint, max constraint]. The
/// direct method ignores `initial` and reports zero iterations.
std::pair<Eigen::VectorXd, SolveReport> solve(const LinearSystem& system,
                                              const SolveOptions& options = {});

constexpr int kDenseOracleCap = 4096;

/// Dense Cholesky solve of the same system; TooLarge beyond kDenseOracleCap
/// unknowns.
Eigen::VectorXd dense_oracle(const LinearSystem& system);

/// Sum of squared differences over edges between active cells. The 2-D
/// Dirichlet integral of the piecewise-linear interpolant is scale free, so no
/// cell-area factor appears.
double dirichlet_energy(const LinearSystem& system, const Eigen::VectorXd& free_values);

}  // namespace capbound
