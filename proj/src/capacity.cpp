#include "capbound/capacity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace capbound {

CellCapacity cell_capacity(const GridMask& mask, const CellSet& zero, const CellSet& one,
                           const SolveOptions& options, Eigen::VectorXd* field,
                           const Eigen::VectorXd* warm_field) {
  if (zero.empty() || one.empty()) throw EmptyPlate("condenser plate has no cells");
  // Canonical order: the lexicographically smaller set carries the value 0.
  const bool swapped = one < zero;
  const CellSet& a = swapped ? one : zero;
  const CellSet& b = swapped ? zero : one;
  const LinearSystem sys = assemble(mask, {{a, 0.0}, {b, 1.0}});

  SolveOptions opt = options;
  Eigen::VectorXd warm;
  if (warm_field != nullptr && warm_field->size() == mask.size()) {
    warm = sys.restrict_field(*warm_field);
    if (swapped) warm = Eigen::VectorXd::Ones(warm.size()) - warm;
    for (int u = 0; u < warm.size(); ++u)
      if (!std::isfinite(warm[u])) warm[u] = 0.5;
    opt.initial = &warm;
  }
  auto [x, report] = solve(sys, opt);
  CellCapacity out;
  out.energy = dirichlet_energy(sys, x);
  out.report = report;
  if (field != nullptr) {
    *field = sys.expand(x);
    if (swapped) *field = (1.0 - field->array()).matrix();
  }
  return out;
}

Eigen::VectorXd prolong(const GridMask& coarse, const Eigen::VectorXd& coarse_field,
                        const GridMask& fine) {
  Eigen::VectorXd out(fine.size());
  for (int k = 0; k < fine.size(); ++k) {
    const int c = coarse.locate(fine.center(k));
    out[k] = (c >= 0 && std::isfinite(coarse_field[c])) ? coarse_field[c] : 0.5;
  }
  return out;
}

namespace {

struct LevelResult {
  GridMask mask;
  Eigen::VectorXd field;
  CellCapacity cap;
};

LevelResult solve_level(const Condenser& c, double h, const SolveOptions& options,
                        const LevelResult* coarser) {
  LevelResult r;
  r.mask = build_mask(c.domain, h);
  const CellSet p0 = rasterize_plate(c.plate0, r.mask);
  const CellSet p1 = rasterize_plate(c.plate1, r.mask);
  if (!set_intersection(p0, p1).empty()) throw PreconditionError("condenser plates overlap");
  Eigen::VectorXd warm;
  if (coarser != nullptr) warm = prolong(coarser->mask, coarser->field, r.mask);
  r.cap = cell_capacity(r.mask, p0, p1, options, &r.field, coarser ? &warm : nullptr);
  return r;
}

}  // namespace

std::pair<CapacityEstimate, PotentialField> condenser_capacity(const Condenser& c, double h,
                                                               int refine,
                                                               const SolveOptions& options) {
  if (!(h > 0)) throw PreconditionError("h must be positive");
  if (refine < 0) throw PreconditionError("refine must be >= 0");
  const auto t0 = std::chrono::steady_clock::now();
  const double hf = h / std::pow(2.0, refine);
  CapacityEstimate est;
  LevelResult fine;
  if (refine >= 1) {
    const LevelResult coarse = solve_level(c, 2 * hf, options, nullptr);
    fine = solve_level(c, hf, options, &coarse);
    est.resolutions_used = {2 * hf, hf};
    est.extrapolated = true;
    est.error_indicator = std::abs(fine.cap.energy - coarse.cap.energy);
    est.value = std::max(0.0, 2 * fine.cap.energy - coarse.cap.energy);
    est.iterations = coarse.cap.report.iterations + fine.cap.report.iterations;
  } else {
    fine = solve_level(c, hf, options, nullptr);
    est.resolutions_used = {hf};
    est.value = fine.cap.energy;
    est.iterations = fine.cap.report.iterations;
  }
  est.finest_energy = fine.cap.energy;
  est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {est, PotentialField{std::move(fine.mask), std::move(fine.field)}};
}

CapacityEstimate set_capacity(const std::vector<Shape>& E, const DomainSpec& domain, double h,
                              int refine, const SolveOptions& options) {
  return condenser_capacity({domain, PlateSpec::boundary(), PlateSpec::inner(E)}, h, refine, options)
      .first;
}

std::vector<AsymptoticRow> asymptotic_lower_suite(const std::vector<double>& eps_list, double h,
                                                  int refine) {
  std::vector<AsymptoticRow> rows;
  for (double eps : eps_list) {
    if (!(eps > 0 && eps < 0.25)) throw PreconditionError("eps must lie in (0, 1/4)");
    const Condenser c{DiskDomain{Point::Zero(), 3.0},
                      PlateSpec::inner({Segment{{-1.0, 0.0}, {-0.5, 0.0}}}),
                      PlateSpec::inner({Segment{{0.0, 0.0}, {eps, 0.0}}})};
    const CapacityEstimate est = condenser_capacity(c, h, refine).first;
    rows.push_back({eps, est.value, est.value / std::log1p(eps), est.error_indicator});
  }
  return rows;
}

std::vector<AsymptoticRow> asymptotic_upper_suite(const std::vector<double>& eps_list, double h,
                                                  int refine) {
  std::vector<AsymptoticRow> rows;
  for (double eps : eps_list) {
    if (!(eps > 0 && eps < 1)) throw PreconditionError("eps must lie in (0, 1)");
    const CapacityEstimate est =
        set_capacity({Segment{{0.0, 0.0}, {eps, 0.0}}}, DiskDomain{Point::Zero(), 1.0}, h, refine);
    rows.push_back({eps, est.value, est.value * std::log(1.0 / eps), est.error_indicator});
  }
  return rows;
}

double ratio_spread(const std::vector<AsymptoticRow>& rows) {
  if (rows.empty()) return 1.0;
  auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                      [](const auto& a, const auto& b) { return a.ratio < b.ratio; });
  return hi->ratio / lo->ratio;
}

double ratio_deviation(const std::vector<AsymptoticRow>& rows) {
  if (rows.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& r : rows) mean += r.ratio;
  mean /= static_cast<double>(rows.size());
  double dev = 0.0;
  for (const auto& r : rows) dev = std::max(dev, std::abs(r.ratio / mean - 1.0));
  return dev;
}

ComparabilityReport comparability_check(const PlateSpec& f01, const PlateSpec& f02,
                                        const std::vector<PlateSpec>& f1_samples,
                                        const DomainSpec& domain, double h, int refine) {
  if (f1_samples.empty()) throw PreconditionError("comparability check needs at least one sample");
  const GridMask mask = build_mask(domain, h);
  const CellSet c01 = rasterize_plate(f01, mask);
  const CellSet c02 = rasterize_plate(f02, mask);
  const bool same01_02 = c01 == c02;
  if (!same01_02 && !set_intersection(c01, c02).empty())
    throw PreconditionError("F01 and F02 overlap");
  ComparabilityReport rep;
  for (const auto& f1 : f1_samples) {
    const CellSet c1 = rasterize_plate(f1, mask);
    if (!set_intersection(c1, c01).empty() || !set_intersection(c1, c02).empty())
      throw PreconditionError("F1 overlaps F01 or F02");
    const double a = condenser_capacity({domain, f01, f1}, h, refine).first.value;
    const double b = same01_02 ? a : condenser_capacity({domain, f02, f1}, h, refine).first.value;
    const double ratio = a / b;
    rep.ratios.push_back(ratio);
    rep.K = std::max({rep.K, ratio, 1.0 / ratio});
  }
  return rep;
}

}  // namespace capbound
