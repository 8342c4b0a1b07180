#include "capbound/sobolev_trace.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>

#include "capbound/capacity.hpp"
#include "capbound/parallel.hpp"

namespace capbound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double GridFunction::at(const Point& p) const {
  const int k = mask.locate(p);
  return mask.is_interior(k) ? values[k] : kNaN;
}

double GridFunction::oscillation() const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int k = 0; k < mask.size(); ++k) {
    if (!mask.is_interior(k)) continue;
    lo = std::min(lo, values[k]);
    hi = std::max(hi, values[k]);
  }
  return hi >= lo ? hi - lo : 0.0;
}

double grid_energy(const GridMask& mask, const Eigen::VectorXd& values) {
  double e = 0.0;
  for (int k = 0; k < mask.size(); ++k) {
    if (!mask.is_interior(k)) continue;
    const int i = mask.col(k), j = mask.row(k);
    if (i + 1 < mask.nx() && mask.is_interior(k + 1)) e += std::pow(values[k + 1] - values[k], 2);
    if (j + 1 < mask.ny() && mask.is_interior(k + mask.nx()))
      e += std::pow(values[k + mask.nx()] - values[k], 2);
  }
  return e;
}

GridFunction sample(const DomainSpec& domain, double h, const Formula& f, std::string tag) {
  GridFunction u{domain, build_mask(domain, h), {}, 0.0, std::move(tag)};
  u.values = Eigen::VectorXd::Constant(u.mask.size(), kNaN);
  for (int k = 0; k < u.mask.size(); ++k) {
    if (!u.mask.is_interior(k)) continue;
    const double v = f(u.mask.center(k));
    if (!std::isfinite(v))
      throw InfiniteEnergy(u.tag + ": non-finite sample at an interior cell centre");
    u.values[k] = v;
  }
  u.energy = grid_energy(u.mask, u.values);
  return u;
}

GridFunction scaled(const GridFunction& u, double alpha) {
  GridFunction out = u;
  out.values *= alpha;
  out.energy = grid_energy(out.mask, out.values);
  out.tag = std::to_string(alpha) + "*" + u.tag;
  return out;
}

GridFunction sum(const GridFunction& u, const GridFunction& v) {
  if (!(u.mask == v.mask)) throw PreconditionError("grid functions live on different masks");
  GridFunction out = u;
  out.values += v.values;
  out.energy = grid_energy(out.mask, out.values);
  out.tag = u.tag + "+" + v.tag;
  return out;
}

std::vector<std::string> catalog_tags() {
  return {"coordinate_x", "harmonic_re_z", "constant", "sqrt_singularity", "radial_log"};
}

Formula catalog_formula(const std::string& tag, const Point& z0) {
  if (tag == "coordinate_x" || tag == "harmonic_re_z") return [](const Point& p) { return p.x(); };
  if (tag == "constant") return [](const Point&) { return 1.0; };
  if (tag == "sqrt_singularity")
    return [z0](const Point& p) {
      return std::sqrt(std::complex<double>(z0.x() - p.x(), z0.y() - p.y())).real();
    };
  if (tag == "radial_log") return [z0](const Point& p) { return std::log((p - z0).norm()); };
  throw ValidationError("unknown function tag '" + tag + "'");
}

EnergyRefinement energy_refinement(const DomainSpec& domain, double h, const Formula& f) {
  if (!(h > 0)) throw PreconditionError("h must be positive");
  // Coarsest level that still resolves the domain, then two halvings.
  double start = 4 * h;
  GridFunction first;
  for (;; start /= 2) {
    try {
      first = sample(domain, start, f, "");
      break;
    } catch (const UnresolvedFeature&) {
      if (start < h / 2) throw;
    }
  }
  EnergyRefinement out;
  out.h = {start, start / 2, start / 4};
  out.energy.push_back(first.energy);
  out.energy.push_back(sample(domain, start / 2, f, "").energy);
  out.energy.push_back(sample(domain, start / 4, f, "").energy);
  const double tiny = 1e-12;
  for (int k = 0; k + 1 < 3; ++k)
    if (out.energy[k] > tiny && out.energy[k + 1] / out.energy[k] > 1.5) out.divergent = true;
  const double d1 = out.energy[1] - out.energy[0], d2 = out.energy[2] - out.energy[1];
  if (d1 > 0 && d2 > 0.75 * d1 && d2 > 0.05 * out.energy[2]) out.divergent = true;
  return out;
}

GridFunction make_function(const DomainSpec& domain, const std::string& tag, double h,
                           const Point& z0) {
  const Formula f = catalog_formula(tag, z0);
  const EnergyRefinement check = energy_refinement(domain, h, f);
  if (check.divergent)
    throw InfiniteEnergy(tag + ": discrete energy grows under refinement (" +
                         std::to_string(check.energy[0]) + ", " + std::to_string(check.energy[1]) +
                         ", " + std::to_string(check.energy[2]) + ")");
  return sample(domain, h, f, tag);
}

std::string to_string(LuzinStatus s) {
  return s == LuzinStatus::Success ? "SUCCESS" : "BUDGET_EXCEEDED";
}

std::string to_string(TraceVerdict v) {
  return v == TraceVerdict::Consistent ? "CONSISTENT" : "INCONSISTENT";
}

namespace {

void check_eps(double eps) {
  if (!(eps >= 0) || !std::isfinite(eps)) throw PreconditionError("eps must be finite and >= 0");
}

/// Capacity of `cells` (on u's lattice) against a circle of radius twice the
/// domain's half-extent, extrapolated over `refine` halvings.
std::pair<double, double> ambient_capacity(const GridFunction& u, const CellSet& cells, int refine) {
  const DomainGeometry g = describe(u.domain);
  const Point c = 0.5 * (g.lo + g.hi);
  const DiskDomain ambient{c, std::max(g.hi.x() - g.lo.x(), g.hi.y() - g.lo.y())};
  double coarse = 0.0, fine = 0.0;
  GridMask prev_mask;
  Eigen::VectorXd prev_field;
  for (int r = std::max(0, refine - 1); r <= refine; ++r) {
    const GridMask mask = build_mask(ambient, u.h() / std::pow(2.0, r));
    const CellSet one = transfer(cells, u.mask, mask);
    if (one.empty()) throw PreconditionError("exceptional set lost on the ambient grid");
    const CellSet zero = mask.cells_with(Cell::Boundary);
    Eigen::VectorXd warm, field;
    if (prev_field.size() > 0) warm = prolong(prev_mask, prev_field, mask);
    SolveOptions so;
    so.method = SolverMethod::Direct;
    const CellCapacity cc =
        cell_capacity(mask, zero, one, so, &field, prev_field.size() > 0 ? &warm : nullptr);
    coarse = fine;
    fine = cc.energy;
    prev_mask = mask;
    prev_field = std::move(field);
  }
  if (refine <= 0) return {fine, 0.0};
  return {std::max(0.0, 2 * fine - coarse), std::abs(fine - coarse)};
}

}  // namespace

LuzinReport weak_luzin(const GridFunction& u, double eps, const WeakLuzinOptions& options) {
  check_eps(eps);
  if (options.radius_cells < 1) throw PreconditionError("radius_cells must be >= 1");
  LuzinReport rep;
  rep.eps = eps;
  rep.mask = u.mask;
  rep.metric_kind = "euclidean";
  const GridMask& mask = u.mask;
  const double h = mask.h();
  const double area = interior_area(mask);
  const double lambda = options.kappa * std::sqrt(u.energy / area);

  struct Offset {
    int di, dj;
    double dist;
  };
  std::vector<Offset> offsets;
  const int R = options.radius_cells;
  for (int dj = -R; dj <= R; ++dj)
    for (int di = -R; di <= R; ++di)
      if ((di != 0 || dj != 0) && di * di + dj * dj <= R * R)
        offsets.push_back({di, dj, h * std::sqrt(double(di * di + dj * dj))});

  std::vector<char> removed(static_cast<std::size_t>(mask.size()), 0);
  auto score = [&](int k) {
    double s = 0.0;
    const int i = mask.col(k), j = mask.row(k);
    for (const auto& o : offsets) {
      if (!mask.in_range(i + o.di, j + o.dj)) continue;
      const int q = mask.index(i + o.di, j + o.dj);
      if (!mask.is_interior(q) || removed[static_cast<std::size_t>(q)]) continue;
      s = std::max(s, std::abs(u.values[q] - u.values[k]) / o.dist);
    }
    return s;
  };

  std::vector<double> scores(static_cast<std::size_t>(mask.size()), 0.0);
  std::priority_queue<std::pair<double, int>> heap;
  for (int k = 0; k < mask.size(); ++k) {
    if (!mask.is_interior(k)) continue;
    scores[static_cast<std::size_t>(k)] = score(k);
    const int i = mask.col(k), j = mask.row(k);
    for (const auto& o : offsets) {
      if (o.dj < 0 || (o.dj == 0 && o.di < 0) || !mask.in_range(i + o.di, j + o.dj)) continue;
      const int q = mask.index(i + o.di, j + o.dj);
      if (mask.is_interior(q) && std::abs(u.values[q] - u.values[k]) / o.dist > lambda) ++rep.violations;
    }
    if (scores[static_cast<std::size_t>(k)] > lambda) heap.emplace(scores[static_cast<std::size_t>(k)], k);
  }

  while (!heap.empty()) {
    const auto [s, k] = heap.top();
    heap.pop();
    if (removed[static_cast<std::size_t>(k)] || s != scores[static_cast<std::size_t>(k)]) continue;
    if (s <= lambda) break;
    removed[static_cast<std::size_t>(k)] = 1;
    rep.U_cells.push_back(k);
    const int i = mask.col(k), j = mask.row(k);
    for (const auto& o : offsets) {
      if (!mask.in_range(i + o.di, j + o.dj)) continue;
      const int q = mask.index(i + o.di, j + o.dj);
      if (!mask.is_interior(q) || removed[static_cast<std::size_t>(q)]) continue;
      const double ns = score(q);
      if (ns != scores[static_cast<std::size_t>(q)]) {
        scores[static_cast<std::size_t>(q)] = ns;
        if (ns > lambda) heap.emplace(ns, q);
      }
    }
  }
  std::sort(rep.U_cells.begin(), rep.U_cells.end());
  for (int k = 0; k < mask.size(); ++k)
    if (mask.is_interior(k) && !removed[static_cast<std::size_t>(k)])
      rep.modulus = std::max(rep.modulus, scores[static_cast<std::size_t>(k)]);

  if (!rep.U_cells.empty()) {
    const auto [cap, err] = ambient_capacity(u, rep.U_cells, options.refine);
    rep.cap_U = cap;
    rep.error_indicator = err;
  }
  rep.status = rep.cap_U <= eps + rep.error_indicator ? LuzinStatus::Success
                                                      : LuzinStatus::BudgetExceeded;
  return rep;
}

LuzinReport strong_luzin(const GridFunction& u, double eps, const CapMetric& metric,
                         const StrongLuzinOptions& options, int jobs) {
  check_eps(eps);
  if (options.samples < 2 || options.neighbours < 1)
    throw PreconditionError("strong Luzin needs >= 2 samples and >= 1 neighbour");
  const GridMask& mask = metric.mask();
  LuzinReport rep;
  rep.eps = eps;
  rep.mask = mask;
  rep.metric_kind = "capacitary";
  const double tau = options.tau_fraction * u.oscillation();
  rep.modulus = tau;
  if (tau <= 0.0) return rep;

  const Eigen::VectorXd dist = boundary_distance(mask);
  CellSet band;
  for (int k = 0; k < mask.size(); ++k)
    if (mask.is_interior(k) && dist[k] <= options.band * mask.h() * (1 + 1e-9) &&
        std::isfinite(u.at(mask.center(k))))
      band.push_back(k);
  int stride = 1;
  CellSet samples;
  for (;; ++stride) {
    samples.clear();
    for (int k : band)
      if ((mask.i0() + mask.col(k)) % stride == 0 && (mask.j0() + mask.row(k)) % stride == 0)
        samples.push_back(k);
    if (static_cast<int>(samples.size()) <= options.samples) break;
  }
  const int n = static_cast<int>(samples.size());
  std::vector<double> val(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) val[static_cast<std::size_t>(i)] = u.at(mask.center(samples[static_cast<std::size_t>(i)]));

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> cand;
    for (int j = 0; j < n; ++j)
      if (std::abs(val[static_cast<std::size_t>(i)] - val[static_cast<std::size_t>(j)]) > tau)
        cand.emplace_back((mask.center(samples[static_cast<std::size_t>(i)]) -
                           mask.center(samples[static_cast<std::size_t>(j)])).norm(), j);
    const std::size_t keep = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(options.neighbours));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end());
    for (std::size_t c = 0; c < keep; ++c)
      pairs.emplace_back(std::min(i, cand[c].second), std::max(i, cand[c].second));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<double> d(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), jobs, [&](int p) {
    const auto [i, j] = pairs[static_cast<std::size_t>(p)];
    d[static_cast<std::size_t>(p)] = metric.resolved(mask.center(samples[static_cast<std::size_t>(i)]),
                                                     mask.center(samples[static_cast<std::size_t>(j)]), true);
  });
  std::vector<std::pair<int, int>> bad;
  for (std::size_t p = 0; p < pairs.size(); ++p)
    if (d[p] <= options.radius) bad.push_back(pairs[p]);
  rep.violations = static_cast<int>(bad.size());

  std::vector<char> removed(static_cast<std::size_t>(n), 0);
  CellSet picked;
  while (!bad.empty()) {
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (const auto& [i, j] : bad) {
      ++count[static_cast<std::size_t>(i)];
      ++count[static_cast<std::size_t>(j)];
    }
    const int worst = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
    removed[static_cast<std::size_t>(worst)] = 1;
    picked.push_back(samples[static_cast<std::size_t>(worst)]);
    std::erase_if(bad, [&](const auto& pr) { return pr.first == worst || pr.second == worst; });
  }

  const CellSet F = rasterize_plate(metric.config().F, mask);
  const int lo = -(stride - 1) / 2, hi = lo + stride - 1;
  for (int c : picked) {
    const int i = mask.col(c), j = mask.row(c);
    for (int dj = lo; dj <= hi; ++dj)
      for (int di = lo; di <= hi; ++di)
        if (mask.in_range(i + di, j + dj) && mask.is_interior(mask.index(i + di, j + dj)))
          rep.U_cells.push_back(mask.index(i + di, j + dj));
  }
  std::sort(rep.U_cells.begin(), rep.U_cells.end());
  rep.U_cells.erase(std::unique(rep.U_cells.begin(), rep.U_cells.end()), rep.U_cells.end());
  rep.U_cells = set_difference(rep.U_cells, F);
  if (!rep.U_cells.empty()) {
    SolveOptions so;
    so.method = metric.config().method;
    so.tol = metric.config().tol;
    rep.cap_U = cell_capacity(mask, F, rep.U_cells, so).energy;
  }
  rep.status = rep.cap_U <= eps ? LuzinStatus::Success : LuzinStatus::BudgetExceeded;
  return rep;
}

TraceReport trace(const GridFunction& u, const std::vector<BoundaryElementEstimate>& elements,
                  const CapMetric& metric, const TraceOptions& options, int jobs) {
  if (options.average < 1) throw PreconditionError("trace average must be >= 1");
  if (!(options.tol > 0)) throw PreconditionError("trace tolerance must be positive");
  TraceReport rep;
  const GridMask& mask = metric.mask();
  SolveOptions so;
  so.method = metric.config().method;
  so.tol = metric.config().tol;
  const CellSet F = rasterize_plate(metric.config().F, mask);

  for (const auto& el : elements) {
    if (el.members.empty()) throw PreconditionError("element " + el.label + " has no members");
    ElementTrace et;
    et.label = el.label;
    for (const auto& m : el.members) {
      const BoundarySequence seq = extend(m, u.mask);
      std::vector<double> vals;
      for (const auto& p : seq.points) {
        const double v = u.at(p);
        if (std::isfinite(v)) vals.push_back(v);
      }
      if (vals.empty())
        throw PreconditionError("member " + m.generator + " of " + el.label +
                                " has no points inside the function's grid");
      const std::size_t k = std::min<std::size_t>(vals.size(), static_cast<std::size_t>(options.average));
      double s = 0.0;
      for (std::size_t q = vals.size() - k; q < vals.size(); ++q) s += vals[q];
      et.member_traces.push_back(s / static_cast<double>(k));
      et.samples.push_back(std::move(vals));
    }
    const auto [mn, mx] = std::minmax_element(et.member_traces.begin(), et.member_traces.end());
    et.spread = *mx - *mn;
    et.verdict = et.spread <= options.tol ? TraceVerdict::Consistent : TraceVerdict::Inconsistent;

    if (et.verdict == TraceVerdict::Inconsistent) {
      const Point& star = el.deepest;
      const CellSet probes = realization_probes(mask, star, options.probes);
      Eigen::VectorXd pd(static_cast<Eigen::Index>(probes.size()));
      parallel_for(static_cast<int>(probes.size()), jobs, [&](int k) {
        pd[k] = metric.rho_quick(mask.center(probes[static_cast<std::size_t>(k)]), star).value;
      });
      std::size_t depth = el.members.front().points.size();
      for (const auto& m : el.members) depth = std::min(depth, m.points.size());
      // member_rho[m][k]: quick rho of member point k to the deepest point.
      std::vector<std::vector<double>> member_rho(el.members.size(), std::vector<double>(depth));
      std::vector<std::pair<std::size_t, std::size_t>> jobs_list;
      for (std::size_t m = 0; m < el.members.size(); ++m)
        for (std::size_t k = 0; k < depth; ++k) jobs_list.emplace_back(m, k);
      parallel_for(static_cast<int>(jobs_list.size()), jobs, [&](int q) {
        const auto [m, k] = jobs_list[static_cast<std::size_t>(q)];
        member_rho[m][k] = metric.rho_quick(el.members[m].points[k], star).value;
      });
      for (std::size_t n = 0; n < depth; ++n) {
        double r = 0.0;
        CellSet T{mask.locate(star)};
        for (std::size_t m = 0; m < el.members.size(); ++m)
          for (std::size_t k = n; k < depth; ++k) {
            r = std::max(r, member_rho[m][k]);
            T.push_back(mask.locate(el.members[m].points[k]));
          }
        for (std::size_t k = 0; k < probes.size(); ++k)
          if (pd[static_cast<Eigen::Index>(k)] <= r) T.push_back(probes[k]);
        std::sort(T.begin(), T.end());
        T.erase(std::unique(T.begin(), T.end()), T.end());
        T = set_difference(T, F);
        et.trapping_radius.push_back(r);
        et.trapping_capacity.push_back(cell_capacity(mask, F, T, so).energy);
      }
    }
    rep.elements.push_back(std::move(et));
  }
  return rep;
}

}  // namespace capbound
