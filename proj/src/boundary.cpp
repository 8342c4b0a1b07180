#include "capbound/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "capbound/parallel.hpp"

namespace capbound {

BoundarySequence approach_sequence(const Point& target, const Point& direction, double start,
                                   int depth, double rate, std::string generator) {
  if (depth < 1) throw PreconditionError("sequence depth must be >= 1");
  if (!(rate > 1.0)) throw PreconditionError("sequence rate must exceed 1");
  BoundarySequence seq{{}, std::move(generator), target, direction, start, rate};
  double d = start;
  for (int n = 0; n < depth; ++n, d /= rate) seq.points.push_back(target + d * direction);
  return seq;
}

BoundarySequence extend(const BoundarySequence& seq, const GridMask& mask) {
  BoundarySequence out = seq;
  if (seq.rate <= 1.0 || seq.points.empty()) return out;
  double d = seq.start * std::pow(seq.rate, -static_cast<double>(seq.points.size()));
  for (int guard = 0; guard < 64; ++guard, d /= seq.rate) {
    const Point p = seq.target + d * seq.direction;
    const int c = mask.locate(p);
    if (!mask.is_interior(c) || c == mask.locate(out.points.back())) break;
    out.points.push_back(p);
  }
  return out;
}

BoundarySequence radial_sequence(const Point& center, double radius, double theta, int depth,
                                 double rate) {
  const Point u(std::cos(theta), std::sin(theta));
  return approach_sequence(center + radius * u, -u, radius / rate, depth, rate,
                           "radial(" + std::to_string(theta) + ")");
}

BoundarySequence comb_channel_sequence(double x, int levels) {
  if (levels < 1) throw PreconditionError("comb levels must be >= 1");
  BoundarySequence seq{{}, "comb-channel(" + std::to_string(x) + ")"};
  for (int n = 1; n <= levels; ++n) seq.points.emplace_back(x, 1.5 * std::pow(3.0, -n));
  return seq;
}

BoundarySequence fan_sector_sequence(int sector, int depth, double h) {
  const int sectors = 1 << depth;
  if (sector < 0 || sector >= sectors) throw PreconditionError("fan sector index out of range");
  const double t = 2 * std::numbers::pi * (sector + 0.5) / sectors;
  const Point u(std::cos(t), std::sin(t));
  const double last = std::numbers::sqrt2 * h;
  BoundarySequence seq{{}, "fan-sector(" + std::to_string(sector) + ")"};
  for (double r = 0.5; r > 2 * last; r /= 2) seq.points.push_back(r * u);
  Point end = last * u;
  if (depth == 2) end = Point(u.x() > 0 ? h : -h, u.y() > 0 ? h : -h);
  seq.points.push_back(end);
  return seq;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Same: return "SAME";
    case Verdict::Distinct: return "DISTINCT";
    default: return "INCONCLUSIVE";
  }
}

namespace {

Eigen::MatrixXd pairwise_resolved(const std::vector<Point>& pts, const CapMetric& metric, int jobs) {
  const int n = static_cast<int>(pts.size());
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  parallel_for(static_cast<int>(pairs.size()), jobs, [&](int k) {
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    d(i, j) = metric.resolved(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
  });
  for (const auto& [i, j] : pairs) d(j, i) = d(i, j);
  return d;
}

// Boundary and exterior cells: a cell touching an interior cell at a corner
// still carries boundary points (slit junctions rasterize this way).
bool is_wall(Cell c) { return c == Cell::Boundary || c == Cell::Exterior; }

std::vector<double> tail_max(const Eigen::MatrixXd& d) {
  const int n = static_cast<int>(d.rows());
  std::vector<double> out;
  for (int i = 0; i + 1 < n; ++i) out.push_back(d.bottomRightCorner(n - i, n - i).maxCoeff());
  return out;
}

}  // namespace

CauchyProfile cauchy_profile(const BoundarySequence& seq, const CapMetric& metric, int jobs) {
  if (seq.points.size() < 3) throw PreconditionError("cauchy profile needs at least 3 points");
  CauchyProfile prof;
  prof.pairwise = pairwise_resolved(seq.points, metric, jobs);
  prof.tail_max = tail_max(prof.pairwise);
  prof.decreasing = prof.tail_max.back() < prof.tail_max.front() || prof.tail_max.front() == 0.0;
  return prof;
}

SameElementReport same_element(const BoundarySequence& s1, const BoundarySequence& s2,
                               const CapMetric& metric, double tol, int jobs) {
  if (!(tol > 0)) throw PreconditionError("tolerance must be positive");
  const std::size_t n = std::min(s1.points.size(), s2.points.size());
  if (n < 3) throw PreconditionError("sequences need at least 3 points");
  SameElementReport rep;
  rep.cross.resize(n);
  parallel_for(static_cast<int>(n), jobs, [&](int k) {
    rep.cross[static_cast<std::size_t>(k)] =
        metric.resolved(s1.points[static_cast<std::size_t>(k)], s2.points[static_cast<std::size_t>(k)]);
  });
  const bool distinct = std::all_of(rep.cross.end() - 3, rep.cross.end(),
                                    [&](double v) { return v > 3 * tol; });
  if (distinct) {
    rep.verdict = Verdict::Distinct;
    return rep;
  }
  std::vector<Point> inter;
  for (std::size_t k = 0; k < n; ++k) {
    inter.push_back(s1.points[k]);
    inter.push_back(s2.points[k]);
  }
  rep.interleaved_profile = tail_max(pairwise_resolved(inter, metric, jobs));
  rep.verdict = rep.interleaved_profile.back() < tol ? Verdict::Same : Verdict::Inconclusive;
  return rep;
}

BoundaryElementEstimate make_element(std::string label, std::vector<BoundarySequence> members,
                                     const CapMetric& metric, double tol, int jobs) {
  if (members.empty()) throw PreconditionError("boundary element needs a member sequence");
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j)
      if (same_element(members[i], members[j], metric, tol, jobs).verdict != Verdict::Same)
        throw PreconditionError("member sequences of " + label + " are not SAME-classified");
  BoundaryElementEstimate el;
  el.label = std::move(label);
  std::vector<Point> deepest;
  for (const auto& m : members) deepest.push_back(m.points.back());
  el.deepest_distances = pairwise_resolved(deepest, metric, jobs);
  if (members.front().points.size() >= 3)
    el.cauchy_profile = cauchy_profile(members.front(), metric, jobs).tail_max;
  el.deepest = members.front().points.back();
  el.members = std::move(members);
  return el;
}

CellSet realization_probes(const GridMask& mask, const Point& deepest,
                           const RealizationOptions& options) {
  const double h = mask.h();
  const Eigen::VectorXd dist = boundary_distance(mask);
  CellSet probes;
  for (int k = 0; k < mask.size(); ++k) {
    if (!mask.is_interior(k)) continue;
    const int gi = mask.i0() + mask.col(k), gj = mask.j0() + mask.row(k);
    const bool in_band = dist[k] <= options.band * h * (1 + 1e-9) &&
                         gi % options.stride == 0 && gj % options.stride == 0;
    const double r = (mask.center(k) - deepest).norm();
    const bool in_core = r <= options.core * h * (1 + 1e-9);
    if (options.window > 0 && r > options.window) continue;
    if (in_band || in_core) probes.push_back(k);
  }
  return probes;
}

RealizationReport realization(const BoundaryElementEstimate& element,
                              const std::vector<double>& eps_list, const CapMetric& metric,
                              const RealizationOptions& options, int jobs) {
  if (eps_list.empty()) throw PreconditionError("realization needs at least one eps");
  const GridMask& mask = metric.mask();
  RealizationReport rep;
  rep.probes = realization_probes(mask, element.deepest, options);
  rep.probe_distance.resize(static_cast<Eigen::Index>(rep.probes.size()));
  parallel_for(static_cast<int>(rep.probes.size()), jobs, [&](int k) {
    rep.probe_distance[k] =
        metric.resolved(mask.center(rep.probes[static_cast<std::size_t>(k)]), element.deepest, true);
  });
  bool first = true;
  for (double eps : eps_list) {
    CellSet disk;
    for (std::size_t k = 0; k < rep.probes.size(); ++k)
      if (rep.probe_distance[static_cast<Eigen::Index>(k)] < eps) disk.push_back(rep.probes[k]);
    CellSet closure = disk;
    for (int c : disk) {
      const int i = mask.col(c), j = mask.row(c);
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (mask.in_range(i + di, j + dj) && is_wall(mask.label(mask.index(i + di, j + dj))))
            closure.push_back(mask.index(i + di, j + dj));
    }
    std::sort(closure.begin(), closure.end());
    closure.erase(std::unique(closure.begin(), closure.end()), closure.end());
    rep.cells = first ? closure : set_intersection(rep.cells, closure);
    first = false;
    rep.per_eps.push_back(std::move(closure));
  }
  return rep;
}

std::vector<CombRow> comb_collapse_test(int levels, double x1, double x2, const CapMetric& metric,
                                        int jobs) {
  if (levels < 1) throw PreconditionError("comb levels must be >= 1");
  if (!(x1 > -1 && x1 < 1 && x2 > -1 && x2 < 1)) throw PreconditionError("x1, x2 must lie in (-1, 1)");
  if (std::pow(3.0, -levels) < 3 * metric.mask().h() * (1 - 1e-9))
    throw UnresolvedFeature("comb level " + std::to_string(levels) + " is not resolved at h=" +
                            std::to_string(metric.mask().h()));
  std::vector<CombRow> rows(static_cast<std::size_t>(levels));
  parallel_for(levels, jobs, [&](int k) {
    const int n = k + 1;
    const double y = 1.5 * std::pow(3.0, -n);
    const Point a(x1, y), b(x2, y);
    const double v = metric.rho(a, b).value;
    const double floor = a == b ? 0.0 : std::max(metric.point_floor(a), metric.point_floor(b));
    rows[static_cast<std::size_t>(k)] = {n, y, v, std::max(0.0, v - floor)};
  });
  return rows;
}

double x_extent(const CellSet& cells, const GridMask& mask) {
  if (cells.empty()) return 0.0;
  double lo = mask.center(cells.front()).x(), hi = lo;
  for (int c : cells) {
    lo = std::min(lo, mask.center(c).x());
    hi = std::max(hi, mask.center(c).x());
  }
  return hi - lo;
}

}  // namespace capbound
