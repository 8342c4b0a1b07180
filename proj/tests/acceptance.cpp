// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// on the command line to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "capbound/boundary.hpp"
#include "capbound/capacity.hpp"
#include "capbound/capmetric.hpp"
#include "capbound/maps.hpp"
#include "capbound/scene.hpp"
#include "capbound/sobolev_trace.hpp"

using namespace capbound;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kAnnulusTol = 0.02;
constexpr double kAnnulusSolveSeconds = 10.0;
constexpr double kSetCapTol = 0.05;
constexpr double kSolverAgreement = 1e-8;
constexpr double kSubadditivitySlack = 0.05;
constexpr double kCapacitySpread = 3.0;
constexpr double kMetricSpread = 4.0;
constexpr double kTriangleSlack = 1.10;
constexpr double kEquivalenceStability = 0.20;
constexpr double kMobiusTol = 0.05;
constexpr double kTraceTol = 1e-2;
constexpr double kCombSpread = 0.9;
constexpr double kCombExtent = 1.5;
constexpr double kSuiteMinutes = 30.0;

constexpr double kPi = std::numbers::pi;

int g_jobs = 1;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Scene scene(const std::string& name) { return load_scene(std::string(CAPBOUND_SCENE_DIR) + "/" + name + ".json"); }

// 1. Annulus oracle: u = ln(t/r)/ln(R/r) has energy 2 pi / ln(R/r) = 2 pi for R/r = e.
Outcome annulus() {
  const double R = 1.0, r = R / std::numbers::e;
  const Condenser c{DiskDomain{Point::Zero(), 1.2 * R}, PlateSpec::inner({Annulus{Point::Zero(), R, 1.2 * R}}),
                    PlateSpec::inner({Disk{Point::Zero(), r}})};
  const double h = 2.4 * R / 512;
  const CapacityEstimate est = condenser_capacity(c, 2 * h, 1).first;
  const double rel = std::abs(est.value / (2 * kPi) - 1);
  const double t0 = now();
  condenser_capacity(c, h, 0);
  const double solve = now() - t0;
  Outcome o;
  o.pass = est.extrapolated && rel <= kAnnulusTol && solve < kAnnulusSolveSeconds;
  o.detail = "cp=" + fmt("%.5f", est.value) + " rel=" + fmt("%.4f", rel) + " 512^2 solve " + fmt("%.2f", solve) + "s";
  return o;
}

// 2. cp(boundary, disk(0,eps); disk(0,1)) = 2 pi / ln(1/eps).
Outcome set_capacity_oracle() {
  Outcome o;
  for (double eps : {0.2, 0.1, 0.05}) {
    const double v = set_capacity({Disk{Point::Zero(), eps}}, DiskDomain{Point::Zero(), 1.0}, 0.01, 1).value;
    const double rel = std::abs(v / (2 * kPi / std::log(1 / eps)) - 1);
    o.pass = o.pass && rel <= kSetCapTol;
    o.detail += "eps=" + fmt("%g", eps) + " rel=" + fmt("%.4f", rel) + " ";
  }
  return o;
}

Shape random_shape(std::mt19937& rng, double lo, double hi) {
  std::uniform_real_distribution<double> pos(lo, hi), size(0.06, 0.16);
  const Point c(pos(rng), pos(rng));
  if (rng() % 2) return Disk{c, size(rng)};
  const double w = size(rng), v = size(rng);
  return Rect{c - Point(w, v), c + Point(w, v)};
}

Point center_of(const Shape& s) {
  if (const auto* d = std::get_if<Disk>(&s)) return d->center;
  const auto& r = std::get<Rect>(s);
  return (r.lo + r.hi) / 2;
}

// 3. PCG and sparse LDL^T against the dense oracle.
Outcome solver_equivalence() {
  std::mt19937 rng(2024);
  double worst = 0;
  int systems = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double h = 0.03 + 0.01 * (trial % 3);
    const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, h);
    const CellSet a = trial % 2 ? m.cells_with(Cell::Boundary)
                                : rasterize_shapes({random_shape(rng, -0.6, -0.2)}, m);
    const CellSet b = rasterize_shapes({random_shape(rng, 0.2, 0.6)}, m);
    if (a.empty() || b.empty()) continue;
    const LinearSystem sys = assemble(m, {{a, 0.0}, {b, 1.0}});
    if (sys.unknowns() > kDenseOracleCap) continue;
    const Eigen::VectorXd ref = dense_oracle(sys);
    SolveOptions pcg;
    pcg.tol = 1e-13;
    SolveOptions direct;
    direct.method = SolverMethod::Direct;
    worst = std::max(worst, (solve(sys, pcg).first - ref).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (solve(sys, direct).first - ref).lpNorm<Eigen::Infinity>());
    ++systems;
  }
  return {systems == 20 && worst <= kSolverAgreement,
          std::to_string(systems) + " systems, max |diff| " + fmt("%.3g", worst)};
}

// 4. Capacity properties on randomized condensers.
Outcome capacity_properties() {
  std::mt19937 rng(7);
  int violations = 0, cases = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const GridMask m = build_mask(DiskDomain{Point::Zero(), 1.0}, 0.04);
    const CellSet f0 = trial % 2 ? m.cells_with(Cell::Boundary) : rasterize_shapes({random_shape(rng, -0.7, -0.3)}, m);
    const Shape s1 = random_shape(rng, 0.0, 0.4);
    const Shape s2 = random_shape(rng, 0.2, 0.6);
    const CellSet e1 = rasterize_shapes({s1}, m), e2 = rasterize_shapes({s2}, m);
    const CellSet grown = rasterize_shapes({s1, Disk{center_of(s1), 0.2}}, m);
    if (f0.empty() || e1.empty() || e2.empty() || !set_intersection(f0, set_union(grown, e2)).empty()) continue;
    ++cases;
    const double c1 = cell_capacity(m, f0, e1).energy;
    const double c2 = cell_capacity(m, f0, e2).energy;
    const double cg = cell_capacity(m, f0, grown).energy;
    const double c12 = cell_capacity(m, f0, set_union(e1, e2)).energy;
    const double swapped = cell_capacity(m, e1, f0).energy;
    if (!(c1 >= 0 && c2 >= 0)) ++violations;
    if (cg < c1 * (1 - 1e-9)) ++violations;
    if (swapped != c1) ++violations;
    if (std::sqrt(c12) > (std::sqrt(c1) + std::sqrt(c2)) * (1 + kSubadditivitySlack)) ++violations;
  }
  return {cases == 50 && violations == 0,
          std::to_string(cases) + " condensers, " + std::to_string(violations) + " violations"};
}

// 5. Asymptotic capacity and metric ratios.
Outcome asymptotics() {
  const std::vector<double> eps{0.05, 0.1, 0.2};
  const auto lower = asymptotic_lower_suite(eps, 0.01, 1);
  const auto upper = asymptotic_upper_suite(eps, 0.01, 1);
  const CapMetric metric(MetricConfig{DiskDomain{Point::Zero(), 1.0},
                                      PlateSpec::inner({Disk{Point(-0.5, 0.0), 0.1}}),
                                      Region{Disk{Point(-0.5, 0.0), 0.2}}, 1.0 / 128});
  const auto prop = asymptotic_ratio(eps, metric, g_jobs);
  const double sl = ratio_spread(lower), su = ratio_spread(upper), sp = ratio_spread(prop);
  return {sl <= kCapacitySpread && su <= kCapacitySpread && sp <= kMetricSpread,
          "lower spread " + fmt("%.3f", sl) + ", upper spread " + fmt("%.3f", su) + ", rho/eps spread " +
              fmt("%.3f", sp)};
}

const MetricConfig& axiom_config() {
  static const MetricConfig c{DiskDomain{Point::Zero(), 1.0}, PlateSpec::inner({Disk{Point::Zero(), 0.1}}),
                              Region{Disk{Point::Zero(), 0.25}}, 1.0 / 32};
  return c;
}

Point random_disk_point(std::mt19937& rng, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  for (;;) {
    const Point p(u(rng), u(rng));
    if (p.norm() < radius) return p;
  }
}

// 6. Metric axioms.
Outcome metric_axioms() {
  const CapMetric m(axiom_config());
  const double h = m.mask().h();
  std::mt19937 rng(42);
  std::vector<std::array<Point, 3>> triples;
  for (int k = 0; k < 20; ++k)
    triples.push_back({random_disk_point(rng, 0.85), random_disk_point(rng, 0.85), random_disk_point(rng, 0.85)});
  const TriangleReport tri = triangle_check(triples, m, kTriangleSlack, g_jobs);
  int asym = 0, nonzero_diag = 0, nonpositive = 0, tested = 0;
  for (const auto& t : triples) {
    if (m.rho(t[0], t[0]).value != 0.0) ++nonzero_diag;
    if (m.rho(t[0], t[1]).value != m.rho(t[1], t[0]).value) ++asym;
    for (int i = 0; i < 3; ++i) {
      const Point& x = t[static_cast<std::size_t>(i)];
      const Point& y = t[static_cast<std::size_t>((i + 1) % 3)];
      if ((x - y).norm() < 4 * h) continue;
      ++tested;
      if (!(m.rho(x, y).value > 0)) ++nonpositive;
    }
  }
  return {tri.violations == 0 && asym == 0 && nonzero_diag == 0 && nonpositive == 0,
          "worst triangle ratio " + fmt("%.3f", tri.worst_ratio) + ", asymmetric " + std::to_string(asym) +
              ", rho(x,x)!=0 " + std::to_string(nonzero_diag) + ", non-positive " + std::to_string(nonpositive) +
              "/" + std::to_string(tested)};
}

// 7. Two (F, V) configurations, K on two independent samples of 10 pairs.
Outcome metric_equivalence() {
  const CapMetric m1(axiom_config());
  const CapMetric m2(MetricConfig{DiskDomain{Point::Zero(), 1.0}, PlateSpec::inner({Disk{Point(0.45, 0.3), 0.08}}),
                                  Region{Disk{Point(0.45, 0.3), 0.2}}, 1.0 / 32});
  auto sample = [](unsigned seed) {
    std::mt19937 rng(seed);
    std::vector<std::pair<Point, Point>> pairs;
    while (pairs.size() < 10) {
      const Point x = random_disk_point(rng, 0.85), y = random_disk_point(rng, 0.85);
      if ((x - y).norm() > 0.3) pairs.emplace_back(x, y);
    }
    return pairs;
  };
  const EquivalenceReport a = equivalence_check(m1, m2, sample(1), g_jobs);
  const EquivalenceReport b = equivalence_check(m1, m2, sample(2), g_jobs);
  const double dev = std::abs(b.K / a.K - 1);
  return {std::isfinite(a.K) && std::isfinite(b.K) && a.used > 0 && b.used > 0 && dev <= kEquivalenceStability,
          "K=" + fmt("%.3f", a.K) + " resampled K=" + fmt("%.3f", b.K) + " deviation " + fmt("%.3f", dev)};
}

struct SceneElements {
  Scene scene;
  std::vector<BoundaryElementEstimate> elements;
};

SceneElements build_elements(const std::string& name, const CapMetric& metric) {
  SceneElements out{scene(name), {}};
  const BoundaryScene& bs = *out.scene.boundary;
  for (const auto& es : bs.elements) {
    std::vector<BoundarySequence> members;
    for (const auto& m : es.members) members.push_back(make_sequence(m, out.scene.h));
    out.elements.push_back(make_element(es.label, std::move(members), metric, bs.tol, g_jobs));
  }
  return out;
}

bool all_pairs_distinct(const SceneElements& se, const CapMetric& metric, std::string& detail) {
  int distinct = 0, total = 0;
  double weakest = 1e300;
  for (std::size_t i = 0; i < se.elements.size(); ++i)
    for (std::size_t j = i + 1; j < se.elements.size(); ++j) {
      const auto r = same_element(se.elements[i].members.front(), se.elements[j].members.front(), metric,
                                  se.scene.boundary->tol, g_jobs);
      ++total;
      if (r.verdict == Verdict::Distinct) ++distinct;
      weakest = std::min(weakest, *std::min_element(r.cross.end() - 3, r.cross.end()));
    }
  detail += std::to_string(distinct) + "/" + std::to_string(total) + " DISTINCT (weakest " + fmt("%.3f", weakest) + ")";
  return distinct == total;
}

// 8. Boundary suite.
Outcome boundary_suite() {
  Outcome o;
  {
    const Scene s = scene("disk_boundary");
    const CapMetric metric(s.metric_config());
    const SceneElements se = build_elements("disk_boundary", metric);
    o.detail += "disk: ";
    bool ok = all_pairs_distinct(se, metric, o.detail);
    double worst = 0;
    for (const auto& el : se.elements) {
      const auto rz = realization(el, s.boundary->eps, metric, s.boundary->realization, g_jobs);
      worst = std::max(worst, diameter(rz.cells, metric.mask()));
    }
    ok = ok && worst <= 4 * s.h;
    o.detail += ", max impression diameter " + fmt("%.4f", worst) + " (4h " + fmt("%.4f", 4 * s.h) + "); ";
    o.pass = o.pass && ok;
  }
  {
    const Scene s = scene("slit_disk");
    const CapMetric metric(s.metric_config());
    const SceneElements se = build_elements("slit_disk", metric);
    const auto& a = se.elements[0].members.front();
    const auto& b = se.elements[1].members.front();
    const auto r = same_element(a, b, metric, s.boundary->tol, g_jobs);
    const double gap = (a.points.back() - b.points.back()).norm();
    const bool same_limit = (a.target - b.target).norm() < 1e-12 && gap <= 4 * s.h;
    o.pass = o.pass && r.verdict == Verdict::Distinct && same_limit;
    o.detail += "slit: " + to_string(r.verdict) + ", last cross " + fmt("%.3f", r.cross.back()) +
                ", Euclidean gap " + fmt("%.4f", gap) + "; ";
  }
  {
    const Scene s = scene("comb");
    const CapMetric metric(s.metric_config());
    const auto& cc = *s.boundary->comb_collapse;
    const auto rows = comb_collapse_test(cc.levels, cc.x1, cc.x2, metric, g_jobs);
    bool decreasing = true;
    for (std::size_t k = 1; k < rows.size(); ++k) decreasing = decreasing && rows[k].rho < rows[k - 1].rho;
    const SceneElements se = build_elements("comb", metric);
    const auto rz = realization(se.elements.front(), s.boundary->eps, metric, s.boundary->realization, g_jobs);
    const double extent = x_extent(rz.cells, metric.mask());
    o.pass = o.pass && decreasing && extent >= kCombExtent;
    o.detail += "comb: rho";
    for (const auto& r : rows) o.detail += " " + fmt("%.3f", r.rho);
    o.detail += std::string(decreasing ? " decreasing" : " NOT decreasing") + ", x-extent " + fmt("%.3f", extent) + "; ";
  }
  {
    const Scene s = scene("fan");
    const CapMetric metric(s.metric_config());
    const SceneElements se = build_elements("fan", metric);
    o.detail += "fan: ";
    bool ok = all_pairs_distinct(se, metric, o.detail);
    const int origin = metric.mask().locate(Point::Zero());
    int containing = 0;
    for (const auto& el : se.elements) {
      const auto rz = realization(el, s.boundary->eps, metric, s.boundary->realization, g_jobs);
      if (std::binary_search(rz.cells.begin(), rz.cells.end(), origin)) ++containing;
    }
    ok = ok && containing == static_cast<int>(se.elements.size());
    o.detail += ", origin in " + std::to_string(containing) + "/" + std::to_string(se.elements.size()) + " impressions";
    o.pass = o.pass && ok;
  }
  return o;
}

// 9. Conformal invariance and the stretch band.
Outcome invariance() {
  Outcome o;
  const Scene mob = scene("mobius");
  double worst = 0;
  for (const std::complex<double> a : {std::complex<double>(0.3, 0.0), std::complex<double>(-0.2, 0.4)}) {
    const InvarianceReport r = invariance_check(Map::disk_automorphism(a), *mob.condenser, mob.h, mob.refine);
    worst = std::max(worst, std::abs(r.ratio - 1));
  }
  o.pass = worst <= kMobiusTol;
  o.detail = "mobius max |ratio-1| " + fmt("%.4f", worst) + "; ";

  const Scene st = scene("stretch");
  const Map stretch = Map::affine_stretch(2.0);
  const InvarianceReport r = invariance_check(stretch, *st.condenser, st.h, st.refine);
  const double lo = 0.25 * (1 - r.delta), hi = 4 * (1 + r.delta);
  const bool band = r.ratio >= lo && r.ratio <= hi;

  const MetricConfig src = st.metric_config();
  MetricConfig img = src;
  img.domain = pushforward(stretch, src.domain, src.h);
  img.F = pushforward(stretch, src.F, src.h);
  img.V = pushforward(stretch, src.V);
  const CapMetric ms(src), mi(img);
  const QuasiIsometryReport q = quasi_isometry_check(stretch, st.pairs, ms, mi, g_jobs);
  const bool metric_ok = q.used > 0 && q.constant <= 2 * (1 + r.delta);
  o.pass = o.pass && band && metric_ok;
  o.detail += "stretch capacity ratio " + fmt("%.4f", r.ratio) + " in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) +
              "], metric constant " + fmt("%.4f", q.constant) + " <= " + fmt("%.4f", 2 * (1 + r.delta)) + " (" +
              std::to_string(q.used) + " pairs)";
  return o;
}

// 10. Trace suite.
Outcome trace_suite() {
  Outcome o;
  {
    const Scene s = scene("disk_boundary");
    const CapMetric metric(s.metric_config());
    const SceneElements se = build_elements("disk_boundary", metric);
    const GridFunction u = make_function(s.domain, "harmonic_re_z", s.trace->h > 0 ? s.trace->h : s.h);
    const TraceReport rep = trace(u, se.elements, metric, {}, g_jobs);
    double worst = 0;
    int consistent = 0;
    for (std::size_t k = 0; k < rep.elements.size(); ++k) {
      const Point target = se.elements[k].members.front().target;
      const double theta = std::atan2(target.y(), target.x());
      for (double t : rep.elements[k].member_traces) worst = std::max(worst, std::abs(t - std::cos(theta)));
      if (rep.elements[k].verdict == TraceVerdict::Consistent) ++consistent;
    }
    o.pass = rep.elements.size() == 8 && consistent == 8 && worst <= kTraceTol;
    o.detail = "disk: " + std::to_string(consistent) + "/8 CONSISTENT, max |trace - cos| " + fmt("%.4f", worst) + "; ";
  }
  {
    const Scene s = scene("comb");
    const CapMetric metric(s.metric_config());
    const SceneElements se = build_elements("comb", metric);
    const GridFunction u = make_function(s.domain, "coordinate_x", s.trace->h > 0 ? s.trace->h : s.h);
    const TraceReport rep = trace(u, se.elements, metric, {}, g_jobs);
    const ElementTrace& et = rep.elements.front();
    bool decreasing = et.trapping_capacity.size() >= 3;
    for (std::size_t k = 1; k < et.trapping_capacity.size(); ++k)
      decreasing = decreasing && et.trapping_capacity[k] < et.trapping_capacity[k - 1];
    o.pass = o.pass && et.verdict == TraceVerdict::Inconsistent && et.spread >= kCombSpread && decreasing;
    o.detail += "comb: " + to_string(et.verdict) + " spread " + fmt("%.3f", et.spread) + ", trapping";
    for (double c : et.trapping_capacity) o.detail += " " + fmt("%.4f", c);
    o.detail += "; ";
  }
  {
    const Scene s = scene("disk_boundary");
    const GridFunction u = make_function(s.domain, "sqrt_singularity", 1.0 / 64);
    int success = 0, broken = 0;
    for (double eps : {4.0, 2.0, 1.0}) {
      const LuzinReport r = weak_luzin(u, eps);
      const bool within = r.cap_U <= r.eps + r.error_indicator;
      if (r.status == LuzinStatus::Success) ++success;
      if ((r.status == LuzinStatus::Success) != within) ++broken;
      o.detail += "eps=" + fmt("%g", eps) + " cap_U=" + fmt("%.3f", r.cap_U) + " " + to_string(r.status) + " ";
    }
    o.pass = o.pass && success > 0 && broken == 0;
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// 11. Byte-identical CLI output across two runs, and the suite's wall time.
Outcome reproducibility(double suite_start) {
  const fs::path base = fs::temp_directory_path() / ("capbound_repro_" + std::to_string(::getpid()));
  fs::remove_all(base);
  int mismatches = 0, files = 0, failures = 0;
  const std::vector<std::pair<std::string, std::string>> runs{{"capacity", "annulus"}, {"distance", "disk_metric"},
                                                              {"invariance --map affine_stretch:2", "stretch"}};
  for (const auto& [sub, sc] : runs) {
    std::vector<fs::path> outs;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = base / (sc + std::to_string(k));
      const std::string cmd = std::string(CAPBOUND_CLI) + " " + sub + " --scene " + CAPBOUND_SCENE_DIR + "/" + sc +
                              ".json --out " + out.string() + " --jobs " + std::to_string(g_jobs) + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) ++failures;
      outs.push_back(out);
    }
    for (const auto& e : fs::directory_iterator(outs[0])) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (slurp(e.path()) != slurp(outs[1] / e.path().filename())) ++mismatches;
    }
  }
  fs::remove_all(base);
  const double minutes = (now() - suite_start) / 60;
  return {failures == 0 && files > 0 && mismatches == 0 && minutes < kSuiteMinutes,
          std::to_string(files) + " CSVs compared, " + std::to_string(mismatches) + " differ, " +
              std::to_string(failures) + " failed runs; suite time " + fmt("%.1f", minutes) + " min on " +
              std::to_string(g_jobs) + " threads"};
}

}  // namespace

int main(int argc, char** argv) {
  g_jobs = std::max(1u, std::thread::hardware_concurrency());
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));
  const double start = now();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"annulus capacity oracle", annulus},
      {"concentric-disk set capacity", set_capacity_oracle},
      {"solver equivalence", solver_equivalence},
      {"capacity property suite", capacity_properties},
      {"asymptotic ratios", asymptotics},
      {"metric axioms", metric_axioms},
      {"metric equivalence", metric_equivalence},
      {"boundary suite", boundary_suite},
      {"conformal invariance", invariance},
      {"trace suite", trace_suite},
      {"reproducibility", [&] { return reproducibility(start); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const double t0 = now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %2d %-30s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                o.detail.c_str(), now() - t0);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
