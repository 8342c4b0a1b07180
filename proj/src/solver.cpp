#include "capbound/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace capbound {

LinearSystem assemble(const GridMask& mask, const std::vector<Constraint>& constraints) {
  LinearSystem sys;
  const int n = mask.size();
  sys.nx = mask.nx();
  sys.state.assign(static_cast<std::size_t>(n), LinearSystem::Inactive);
  sys.fixed_value = Eigen::VectorXd::Zero(n);
  sys.free_index.assign(static_cast<std::size_t>(n), -1);

  bool any = false;
  sys.min_value = std::numeric_limits<double>::infinity();
  sys.max_value = -std::numeric_limits<double>::infinity();
  for (const auto& c : constraints) {
    for (int idx : c.cells) {
      if (idx < 0 || idx >= n) throw PreconditionError("constraint cell out of range");
      if (mask.label(idx) == Cell::Exterior) throw PreconditionError("constraint on exterior cell");
      if (sys.state[static_cast<std::size_t>(idx)] == LinearSystem::Fixed)
        throw PreconditionError("constraint sets overlap");
      sys.state[static_cast<std::size_t>(idx)] = LinearSystem::Fixed;
      sys.fixed_value[idx] = c.value;
    }
    if (!c.cells.empty()) {
      any = true;
      sys.min_value = std::min(sys.min_value, c.value);
      sys.max_value = std::max(sys.max_value, c.value);
    }
  }
  if (!any) throw PreconditionError("no constrained cells: pure Neumann problem is singular");

  for (int k = 0; k < n; ++k) {
    if (mask.label(k) == Cell::Interior && sys.state[static_cast<std::size_t>(k)] != LinearSystem::Fixed) {
      sys.state[static_cast<std::size_t>(k)] = LinearSystem::Free;
      sys.free_index[static_cast<std::size_t>(k)] = static_cast<int>(sys.free_cells.size());
      sys.free_cells.push_back(k);
    }
  }
  const int m = sys.unknowns();
  sys.nbr.assign(static_cast<std::size_t>(m), {-1, -1, -1, -1});
  sys.diag = Eigen::VectorXd::Zero(m);
  sys.rhs = Eigen::VectorXd::Zero(m);
  for (int u = 0; u < m; ++u) {
    const int k = sys.free_cells[static_cast<std::size_t>(u)];
    int slot = 0;
    mask.for_each_neighbor4(k, [&](int nb) {
      switch (sys.state[static_cast<std::size_t>(nb)]) {
        case LinearSystem::Free:
          sys.nbr[static_cast<std::size_t>(u)][static_cast<std::size_t>(slot++)] =
              sys.free_index[static_cast<std::size_t>(nb)];
          sys.diag[u] += 1.0;
          break;
        case LinearSystem::Fixed:
          sys.rhs[u] += sys.fixed_value[nb];
          sys.diag[u] += 1.0;
          break;
        default:
          break;
      }
    });
  }
  // A free cell with no active neighbour (isolated by plates) has a zero row.
  for (int u = 0; u < m; ++u)
    if (sys.diag[u] == 0.0) throw PreconditionError("free cell without active neighbours");
  return sys;
}

void LinearSystem::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const int m = unknowns();
  y.resize(m);
  for (int u = 0; u < m; ++u) {
    const auto& nb = nbr[static_cast<std::size_t>(u)];
    double s = diag[u] * x[u];
    for (int q : nb)
      if (q >= 0) s -= x[q];
    y[u] = s;
  }
}

Eigen::VectorXd LinearSystem::expand(const Eigen::VectorXd& free_values) const {
  const int n = static_cast<int>(state.size());
  Eigen::VectorXd field = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < n; ++k) {
    if (state[static_cast<std::size_t>(k)] == Fixed) field[k] = fixed_value[k];
    else if (state[static_cast<std::size_t>(k)] == Free) field[k] = free_values[free_index[static_cast<std::size_t>(k)]];
  }
  return field;
}

Eigen::VectorXd LinearSystem::restrict_field(const Eigen::VectorXd& field) const {
  Eigen::VectorXd x(unknowns());
  for (int u = 0; u < unknowns(); ++u) x[u] = field[free_cells[static_cast<std::size_t>(u)]];
  return x;
}

std::pair<Eigen::VectorXd, SolveReport> solve(const LinearSystem& sys, const SolveOptions& opt) {
  if (!(opt.tol > 0.0 && opt.tol < 1.0)) throw PreconditionError("tol must lie in (0, 1)");
  const auto t0 = std::chrono::steady_clock::now();
  const int m = sys.unknowns();
  SolveReport report;
  Eigen::VectorXd x;
  if (opt.initial != nullptr && opt.initial->size() == m) {
    x = *opt.initial;
  } else {
    x = Eigen::VectorXd::Constant(m, 0.5 * (sys.min_value + sys.max_value));
  }
  auto finish = [&](Eigen::VectorXd&& sol) {
    for (int u = 0; u < m; ++u) sol[u] = std::clamp(sol[u], sys.min_value, sys.max_value);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::make_pair(std::move(sol), report);
  };
  if (m == 0) return finish(std::move(x));

  const double bnorm = sys.rhs.norm();
  const double scale = bnorm > 0.0 ? bnorm : 1.0;
  Eigen::VectorXd r(m), z(m), p(m), q(m);
  if (opt.method == SolverMethod::Direct) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(m) * 5);
    for (int u = 0; u < m; ++u) {
      entries.emplace_back(u, u, sys.diag[u]);
      for (int nb : sys.nbr[static_cast<std::size_t>(u)])
        if (nb >= 0) entries.emplace_back(u, nb, -1.0);
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(entries.begin(), entries.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw PreconditionError("system is not positive definite");
    x = ldlt.solve(sys.rhs);
    sys.apply(x, q);
    report.residual = (sys.rhs - q).norm() / scale;
    return finish(std::move(x));
  }
  sys.apply(x, q);
  r = sys.rhs - q;
  double rnorm = r.norm();
  report.residual = rnorm / scale;
  if (report.residual <= opt.tol) return finish(std::move(x));

  const int max_it = opt.max_iterations > 0
                         ? opt.max_iterations
                         : std::max(2000, static_cast<int>(40.0 * std::sqrt(double(m))) + 20 * m / 100);
  const Eigen::VectorXd inv_diag = sys.diag.cwiseInverse();
  z = inv_diag.cwiseProduct(r);
  p = z;
  double rz = r.dot(z);
  Eigen::VectorXd best = x;
  double best_res = report.residual;
  for (int it = 1; it <= max_it; ++it) {
    sys.apply(p, q);
    const double alpha = rz / p.dot(q);
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    rnorm = r.norm();
    report.iterations = it;
    report.residual = rnorm / scale;
    if (report.residual < best_res) {
      best_res = report.residual;
      best = x;
    }
    if (report.residual <= opt.tol) return finish(std::move(x));
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw NoConvergence(max_it, best_res, best);
}

Eigen::VectorXd dense_oracle(const LinearSystem& sys) {
  const int m = sys.unknowns();
  if (m > kDenseOracleCap)
    throw TooLarge(std::to_string(m) + " free cells exceed the dense oracle cap of " +
                   std::to_string(kDenseOracleCap));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (int u = 0; u < m; ++u) {
    A(u, u) = sys.diag[u];
    for (int q : sys.nbr[static_cast<std::size_t>(u)])
      if (q >= 0) A(u, q) = -1.0;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw PreconditionError("system is not positive definite");
  return llt.solve(sys.rhs);
}

double dirichlet_energy(const LinearSystem& sys, const Eigen::VectorXd& free_values) {
  const int n = static_cast<int>(sys.state.size());
  auto value = [&](int k) {
    return sys.state[static_cast<std::size_t>(k)] == LinearSystem::Fixed
               ? sys.fixed_value[k]
               : free_values[sys.free_index[static_cast<std::size_t>(k)]];
  };
  double e = 0.0;
  for (int k = 0; k < n; ++k) {
    if (sys.state[static_cast<std::size_t>(k)] == LinearSystem::Inactive) continue;
    const double vk = value(k);
    const int right = k + 1, up = k + sys.nx;
    if ((k + 1) % sys.nx != 0 && sys.state[static_cast<std::size_t>(right)] != LinearSystem::Inactive) {
      const double d = value(right) - vk;
      e += d * d;
    }
    if (up < n && sys.state[static_cast<std::size_t>(up)] != LinearSystem::Inactive) {
      const double d = value(up) - vk;
      e += d * d;
    }
  }
  return e;
}

}  // namespace capbound
