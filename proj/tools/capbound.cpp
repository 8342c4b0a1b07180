// capbound: batch front end for the capacity, metric, boundary, trace and
// invariance suites.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "capbound/boundary.hpp"
#include "capbound/capacity.hpp"
#include "capbound/capmetric.hpp"
#include "capbound/maps.hpp"
#include "capbound/parallel.hpp"
#include "capbound/scene.hpp"
#include "capbound/sobolev_trace.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace capbound;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Shared state of one subcommand run: output directory, manifest and the
/// list of written artifacts.
struct Run {
  std::string subcommand;
  Scene scene;
  fs::path out;
  fs::path svg_dir;  // SVG destination, defaults to `out`
  int jobs = 1;
  bool record_timings = false;
  std::vector<std::string> outputs;
  json timings = json::object();

  std::string manifest_name() const { return subcommand + ".manifest.json"; }

  std::string wall(double t) const { return record_timings ? num(t) : "NA"; }

  template <typename Fn>
  auto timed(const std::string& op, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timings[op] = seconds_since(t0);
    } else {
      auto r = fn();
      timings[op] = seconds_since(t0);
      return r;
    }
  }

  void write_manifest() const {
    json m;
    m["tool"] = "capbound";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["scene"] = scene.name;
    m["scene_hash"] = fnv1a_hex(scene.canonical);
    m["seed"] = scene.seed;
    m["h"] = scene.h;
    m["refine"] = scene.refine;
    m["jobs"] = jobs;
    m["wall_times"] = timings;
    m["outputs"] = outputs;
    std::ofstream(out / manifest_name()) << m.dump(2) << "\n";
  }
};

/// CSV with a manifest reference line and a header row.
class Csv {
 public:
  Csv(Run& run, const std::string& name, const std::vector<std::string>& header)
      : file_(run.out / name) {
    if (!file_) throw ValidationError("cannot write " + (run.out / name).string());
    run.outputs.push_back(name);
    file_ << "# manifest: " << run.manifest_name() << "\n";
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) file_ << (k ? "," : "") << cells[k];
    file_ << "\n";
  }

 private:
  std::ofstream file_;
};

// SVG rendering of a mask, downsampled to at most ~400 blocks per side.
struct Overlay {
  CellSet cells;
  std::string color;
};

void write_svg(Run& run, const std::string& suite, const std::string& case_name, const GridMask& mask,
               const std::vector<Overlay>& overlays, const std::vector<Polyline>& curves = {},
               const Eigen::VectorXd* field = nullptr, const std::vector<Point>& points = {}) {
  const int block = std::max(1, (std::max(mask.nx(), mask.ny()) + 399) / 400);
  const int bw = (mask.nx() + block - 1) / block, bh = (mask.ny() + block - 1) / block;
  const double px = 2.0;
  std::vector<std::string> color(static_cast<std::size_t>(bw * bh));
  std::vector<double> fsum(color.size(), 0.0);
  std::vector<int> fcount(color.size(), 0);
  for (int k = 0; k < mask.size(); ++k) {
    const int b = (mask.row(k) / block) * bw + mask.col(k) / block;
    auto& c = color[static_cast<std::size_t>(b)];
    if (mask.label(k) == Cell::Boundary) c = "#444444";
    else if (mask.label(k) != Cell::Exterior && c.empty()) c = "#dddddd";
    if (field != nullptr && mask.is_interior(k) && std::isfinite((*field)[k])) {
      fsum[static_cast<std::size_t>(b)] += (*field)[k];
      ++fcount[static_cast<std::size_t>(b)];
    }
  }
  for (std::size_t b = 0; b < color.size(); ++b)
    if (fcount[b] > 0 && color[b] == "#dddddd") {
      const int g = static_cast<int>(std::lround(40 + 200 * std::clamp(fsum[b] / fcount[b], 0.0, 1.0)));
      char buf[8];
      std::snprintf(buf, sizeof buf, "#%02x%02x%02x", g, g, 255);
      color[b] = buf;
    }
  for (const auto& o : overlays)
    for (int k : o.cells) color[static_cast<std::size_t>((mask.row(k) / block) * bw + mask.col(k) / block)] = o.color;

  const std::string name = suite + "_" + case_name + ".svg";
  const fs::path dir = run.svg_dir.empty() ? run.out : run.svg_dir;
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  run.outputs.push_back(dir == run.out ? name : fs::absolute(dir / name).string());
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << bw * px << "\" height=\"" << bh * px
    << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx) {
      const auto& c = color[static_cast<std::size_t>(by * bw + bx)];
      if (c.empty()) continue;
      f << "<rect x=\"" << bx * px << "\" y=\"" << (bh - 1 - by) * px << "\" width=\"" << px
        << "\" height=\"" << px << "\" fill=\"" << c << "\"/>\n";
    }
  auto sx = [&](const Point& p) { return (p.x() / mask.h() - mask.i0() + 0.5) / block * px; };
  auto sy = [&](const Point& p) { return (bh - (p.y() / mask.h() - mask.j0() + 0.5) / block) * px; };
  for (const auto& c : curves) {
    f << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" points=\"";
    for (const auto& v : c.vertices) f << num(sx(v)) << "," << num(sy(v)) << " ";
    f << "\"/>\n";
  }
  for (const auto& p : points)
    f << "<circle cx=\"" << num(sx(p)) << "\" cy=\"" << num(sy(p)) << "\" r=\"2\" fill=\"#1f77b4\"/>\n";
  f << "</svg>\n";
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
  return out;
}

// ---------------------------------------------------------------- capacity

void run_capacity(Run& run) {
  if (!run.scene.condenser) throw ValidationError("scene.condenser: missing required section");
  const auto [est, field] = run.timed("condenser_capacity", [&] {
    return condenser_capacity(*run.scene.condenser, run.scene.h, run.scene.refine);
  });
  Csv csv(run, "capacity.csv",
          {"scene", "h", "refine", "value", "h_list", "extrapolated", "error_indicator", "finest_energy",
           "iterations", "wall_time"});
  std::string h_list;
  for (double hr : est.resolutions_used) h_list += (h_list.empty() ? "" : ";") + num(hr);
  csv.row({run.scene.name, num(run.scene.h), std::to_string(run.scene.refine), num(est.value), h_list,
           est.extrapolated ? "true" : "false", num(est.error_indicator), num(est.finest_energy),
           std::to_string(est.iterations), run.wall(est.wall_time)});
  write_svg(run, "capacity", sanitize(run.scene.name), field.mask, {}, {}, &field.values);
}

// ---------------------------------------------------------------- distance

/// Pair list with header x1,y1,x2,y2; '#' lines are skipped.
std::vector<std::pair<Point, Point>> read_pairs(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("--pairs: cannot read " + path.string());
  std::vector<std::pair<Point, Point>> pairs;
  std::string line;
  bool header = false;
  for (int lineno = 1; std::getline(f, line); ++lineno) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("x1,y1,x2,y2", 0) != 0) throw ValidationError(path.string() + ": expected header x1,y1,x2,y2");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    try {
      while (std::getline(ss, cell, ',') && v.size() < 4) v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      v.clear();
    }
    if (v.size() != 4) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected four numbers");
    pairs.push_back({Point(v[0], v[1]), Point(v[2], v[3])});
  }
  return pairs;
}

void run_distance(Run& run, const std::string& pairs_file) {
  if (!pairs_file.empty()) run.scene.pairs = read_pairs(pairs_file);
  if (run.scene.pairs.empty()) throw ValidationError("scene.pairs: missing required field");
  const CapMetric metric(run.scene.metric_config());
  for (const auto& [x, y] : run.scene.pairs)
    if (!metric.mask().is_interior(metric.mask().locate(x)) || !metric.mask().is_interior(metric.mask().locate(y)))
      throw ValidationError("pairs: point outside the interior cells");
  const auto& pairs = run.scene.pairs;
  std::vector<DistanceEstimate> est(pairs.size());
  std::vector<double> res(pairs.size()), wall(pairs.size());
  run.timed("rho", [&] {
    parallel_for(static_cast<int>(pairs.size()), run.jobs, [&](int k) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto& [x, y] = pairs[static_cast<std::size_t>(k)];
      est[static_cast<std::size_t>(k)] = metric.rho(x, y);
      res[static_cast<std::size_t>(k)] = metric.resolved(x, y);
      wall[static_cast<std::size_t>(k)] = seconds_since(t0);
    });
  });
  Csv csv(run, "distance.csv",
          {"pair", "x1", "y1", "x2", "y2", "value", "resolved", "term_F", "term_boundary", "bound_kind",
           "below_resolution", "curve_id", "curve_vertices", "wall_time"});
  std::vector<Polyline> curves;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& e = est[k];
    csv.row({std::to_string(k), num(pairs[k].first.x()), num(pairs[k].first.y()),
             num(pairs[k].second.x()), num(pairs[k].second.y()), num(e.value), num(res[k]),
             num(e.term_F), num(e.term_boundary), e.bound_kind, e.below_resolution ? "true" : "false",
             "curve" + std::to_string(k), std::to_string(e.curve.vertices.size()), run.wall(wall[k])});
    curves.push_back(e.curve);
  }
  const CellSet F = rasterize_plate(metric.config().F, metric.mask());
  write_svg(run, "distance", sanitize(run.scene.name), metric.mask(), {{F, "#2ca02c"}}, curves);
}

// ---------------------------------------------------------------- boundary

json sequence_json(const BoundarySequence& s) {
  json j;
  j["generator"] = s.generator;
  j["points"] = json::array();
  for (const auto& p : s.points) j["points"].push_back({p.x(), p.y()});
  j["target"] = {s.target.x(), s.target.y()};
  j["direction"] = {s.direction.x(), s.direction.y()};
  j["start"] = s.start;
  j["rate"] = s.rate;
  return j;
}

Point json_point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

BoundarySequence sequence_from_json(const json& j) {
  BoundarySequence s;
  s.generator = j.at("generator").get<std::string>();
  for (const auto& p : j.at("points")) s.points.push_back(json_point(p));
  s.target = json_point(j.at("target"));
  s.direction = json_point(j.at("direction"));
  s.start = j.at("start").get<double>();
  s.rate = j.at("rate").get<double>();
  return s;
}

std::vector<BoundaryElementEstimate> load_elements(const fs::path& dir) {
  std::ifstream in(dir / "elements.json");
  if (!in) throw ValidationError("elements: cannot read " + (dir / "elements.json").string());
  json j;
  try {
    in >> j;
    std::vector<BoundaryElementEstimate> out;
    for (const auto& e : j.at("elements")) {
      BoundaryElementEstimate el;
      el.label = e.at("label").get<std::string>();
      for (const auto& m : e.at("members")) el.members.push_back(sequence_from_json(m));
      el.deepest = json_point(e.at("deepest"));
      out.push_back(std::move(el));
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("elements.json: ") + e.what());
  }
}

void run_boundary(Run& run, const std::string& suite) {
  if (!run.scene.boundary) throw ValidationError("scene.boundary: missing required section");
  const BoundaryScene& bs = *run.scene.boundary;
  const CapMetric metric(run.scene.metric_config());
  const GridMask& mask = metric.mask();

  std::vector<BoundaryElementEstimate> elements;
  std::vector<RealizationReport> impressions;
  run.timed("elements", [&] {
    for (const auto& es : bs.elements) {
      std::vector<BoundarySequence> members;
      for (const auto& m : es.members) members.push_back(make_sequence(m, run.scene.h));
      elements.push_back(make_element(es.label, std::move(members), metric, bs.tol, run.jobs));
    }
  });
  run.timed("realization", [&] {
    for (auto& el : elements) {
      impressions.push_back(realization(el, bs.eps, metric, bs.realization, run.jobs));
      el.realization_cells = impressions.back().cells;
    }
  });

  {
    Csv csv(run, "boundary_elements.csv",
            {"label", "members", "depth", "profile_first", "profile_last", "decreasing",
             "impression_cells", "impression_diameter", "x_extent", "deepest_x", "deepest_y"});
    for (std::size_t k = 0; k < elements.size(); ++k) {
      const auto& el = elements[k];
      const auto& prof = el.cauchy_profile;
      csv.row({el.label, std::to_string(el.members.size()), std::to_string(el.members.front().points.size()),
               prof.empty() ? "NA" : num(prof.front()), prof.empty() ? "NA" : num(prof.back()),
               prof.empty() ? "NA" : (prof.back() < prof.front() || prof.front() == 0.0 ? "true" : "false"),
               std::to_string(el.realization_cells.size()), num(diameter(el.realization_cells, mask)),
               num(x_extent(el.realization_cells, mask)), num(el.deepest.x()), num(el.deepest.y())});
    }
  }
  {
    Csv csv(run, "boundary_profiles.csv", {"label", "depth", "tail_max"});
    for (const auto& el : elements)
      for (std::size_t d = 0; d < el.cauchy_profile.size(); ++d)
        csv.row({el.label, std::to_string(d + 1), num(el.cauchy_profile[d])});
  }
  {
    Csv csv(run, "boundary_pairs.csv", {"a", "b", "verdict", "min_cross", "last_cross"});
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < elements.size(); ++i)
      for (std::size_t j = i + 1; j < elements.size(); ++j) pairs.emplace_back(i, j);
    std::vector<SameElementReport> reps(pairs.size());
    run.timed("pairs", [&] {
      for (std::size_t p = 0; p < pairs.size(); ++p)
        reps[p] = same_element(elements[pairs[p].first].members.front(),
                               elements[pairs[p].second].members.front(), metric, bs.tol, run.jobs);
    });
    for (std::size_t p = 0; p < pairs.size(); ++p)
      csv.row({elements[pairs[p].first].label, elements[pairs[p].second].label, to_string(reps[p].verdict),
               num(*std::min_element(reps[p].cross.begin(), reps[p].cross.end())),
               num(reps[p].cross.back())});
  }
  if (bs.comb_collapse) {
    const auto rows = run.timed("comb_collapse", [&] {
      return comb_collapse_test(bs.comb_collapse->levels, bs.comb_collapse->x1, bs.comb_collapse->x2,
                                metric, run.jobs);
    });
    Csv csv(run, "comb.csv", {"level", "y", "rho", "resolved"});
    for (const auto& r : rows) csv.row({std::to_string(r.level), num(r.y), num(r.rho), num(r.resolved)});
  }

  json ej;
  ej["h"] = run.scene.h;
  ej["scene_hash"] = fnv1a_hex(run.scene.canonical);
  ej["elements"] = json::array();
  for (const auto& el : elements) {
    json e;
    e["label"] = el.label;
    e["members"] = json::array();
    for (const auto& m : el.members) e["members"].push_back(sequence_json(m));
    e["deepest"] = {el.deepest.x(), el.deepest.y()};
    e["impression"] = json::array();
    for (int c : el.realization_cells) e["impression"].push_back({mask.center(c).x(), mask.center(c).y()});
    ej["elements"].push_back(e);
  }
  std::ofstream(run.out / "elements.json") << ej.dump(1) << "\n";
  run.outputs.push_back("elements.json");

  for (const auto& el : elements) {
    std::vector<Point> pts;
    for (const auto& m : el.members) pts.insert(pts.end(), m.points.begin(), m.points.end());
    write_svg(run, suite, sanitize(el.label), mask, {{el.realization_cells, "#ff7f0e"}}, {}, nullptr, pts);
  }
}

// ---------------------------------------------------------------- trace

void run_trace(Run& run, const std::string& tag, const std::string& elements_dir) {
  const TraceScene ts = run.scene.trace.value_or(TraceScene{});
  const double hu = ts.h > 0 ? ts.h : run.scene.h;
  const GridFunction u = run.timed("make_function", [&] { return make_function(run.scene.domain, tag, hu, ts.z0); });
  {
    Csv csv(run, "function.csv", {"tag", "h", "energy", "oscillation"});
    csv.row({tag, num(hu), num(u.energy), num(u.oscillation())});
  }
  std::optional<CapMetric> metric;
  if (!elements_dir.empty() || ts.strong) metric.emplace(run.scene.metric_config());

  if (!elements_dir.empty()) {
    const auto elements = load_elements(elements_dir);
    const TraceReport rep = run.timed("trace", [&] { return trace(u, elements, *metric, {}, run.jobs); });
    Csv csv(run, "trace.csv", {"label", "member", "generator", "samples", "trace", "spread", "verdict"});
    Csv trap(run, "trapping.csv", {"label", "depth", "radius", "capacity"});
    for (std::size_t e = 0; e < rep.elements.size(); ++e) {
      const auto& et = rep.elements[e];
      for (std::size_t m = 0; m < et.member_traces.size(); ++m)
        csv.row({et.label, std::to_string(m), elements[e].members[m].generator,
                 std::to_string(et.samples[m].size()), num(et.member_traces[m]), num(et.spread),
                 to_string(et.verdict)});
      for (std::size_t d = 0; d < et.trapping_capacity.size(); ++d)
        trap.row({et.label, std::to_string(d + 1), num(et.trapping_radius[d]), num(et.trapping_capacity[d])});
    }
  }

  Csv csv(run, "luzin.csv",
          {"metric_kind", "eps", "U_cells", "cap_U", "error_indicator", "modulus", "violations", "status"});
  std::optional<LuzinReport> shown;
  for (double eps : ts.eps) {
    std::vector<LuzinReport> reps;
    reps.push_back(run.timed("weak_luzin", [&] { return weak_luzin(u, eps); }));
    if (ts.strong) reps.push_back(run.timed("strong_luzin", [&] { return strong_luzin(u, eps, *metric, {}, run.jobs); }));
    for (auto& r : reps) {
      csv.row({r.metric_kind, num(r.eps), std::to_string(r.U_cells.size()), num(r.cap_U),
               num(r.error_indicator), num(r.modulus), std::to_string(r.violations), to_string(r.status)});
      if (r.metric_kind == "euclidean") shown = r;
    }
  }
  if (shown) write_svg(run, "trace", "luzin_" + sanitize(tag), shown->mask, {{shown->U_cells, "#d62728"}});
}

// ---------------------------------------------------------------- invariance

void run_invariance(Run& run, const std::string& map_spec) {
  const Map map = parse_map(map_spec);
  if (run.scene.condenser) {
    const InvarianceReport rep = run.timed("invariance", [&] {
      return invariance_check(map, *run.scene.condenser, run.scene.h, run.scene.refine);
    });
    Csv csv(run, "invariance.csv",
            {"map", "K", "source", "image", "ratio", "delta", "lower", "upper", "within"});
    csv.row({map.name(), num(rep.K), num(rep.source), num(rep.image), num(rep.ratio), num(rep.delta),
             num(rep.lower), num(rep.upper), rep.within ? "true" : "false"});
    const Condenser img = pushforward(map, *run.scene.condenser, run.scene.h);
    const GridMask mask = build_mask(img.domain, run.scene.h);
    std::vector<Overlay> plates;
    if (img.plate1.role == PlateRole::InnerContinuum) plates.push_back({rasterize_plate(img.plate1, mask), "#2ca02c"});
    if (img.plate0.role == PlateRole::InnerContinuum) plates.push_back({rasterize_plate(img.plate0, mask), "#9467bd"});
    write_svg(run, "invariance", sanitize(run.scene.name), mask, plates);
  }
  if (run.scene.metric && !run.scene.pairs.empty()) {
    const MetricConfig src = run.scene.metric_config();
    MetricConfig img = src;
    img.domain = pushforward(map, src.domain, src.h);
    img.F = pushforward(map, src.F, src.h);
    img.V = pushforward(map, src.V);
    const CapMetric ms(src), mi(img);
    const QuasiIsometryReport q = run.timed("quasi_isometry", [&] {
      return quasi_isometry_check(map, run.scene.pairs, ms, mi, run.jobs);
    });
    Csv csv(run, "quasi_isometry.csv", {"map", "K", "constant", "used", "below_floor"});
    csv.row({map.name(), num(map.K()), num(q.constant), std::to_string(q.used), std::to_string(q.below_floor)});
  }
  if (!run.scene.condenser && !(run.scene.metric && !run.scene.pairs.empty()))
    throw ValidationError("scene: invariance needs a condenser or metric pairs");
}

// ---------------------------------------------------------------- report

void run_report(const fs::path& results, const fs::path& out_file) {
  if (!fs::is_directory(results)) throw ValidationError("report: '" + results.string() + "' is not a directory");
  std::vector<fs::path> manifests;
  for (const auto& e : fs::recursive_directory_iterator(results))
    if (e.is_regular_file() && e.path().string().ends_with(".manifest.json")) manifests.push_back(e.path());
  std::sort(manifests.begin(), manifests.end());
  std::ofstream f(out_file);
  if (!f) throw ValidationError("report: cannot write " + out_file.string());
  f << "# capbound summary\n\n";
  for (const auto& mp : manifests) {
    json m;
    try {
      std::ifstream(mp) >> m;
    } catch (const json::exception& e) {
      throw ValidationError(mp.string() + ": " + e.what());
    }
    f << "## " << m.value("subcommand", "?") << ": " << m.value("scene", "?") << "\n\n";
    f << "scene hash `" << m.value("scene_hash", "") << "`, seed " << m.value("seed", 0) << ", h "
      << m.value("h", 0.0) << ", refine " << m.value("refine", 0) << "\n\n";
    for (const auto& o : m.value("outputs", std::vector<std::string>{})) {
      if (!o.ends_with(".csv")) {
        f << "- " << o << "\n";
        continue;
      }
      f << "\n### " << o << "\n\n";
      std::ifstream csv(mp.parent_path() / o);
      std::string line;
      int row = 0;
      while (std::getline(csv, line)) {
        if (line.rfind("#", 0) == 0) continue;
        std::string cells = "| ";
        for (char c : line) cells += c == ',' ? std::string(" | ") : std::string(1, c);
        f << cells << " |\n";
        if (row == 0) {
          const auto cols = std::count(line.begin(), line.end(), ',') + 1;
          f << "|";
          for (long k = 0; k < cols; ++k) f << "---|";
          f << "\n";
        }
        if (++row > 40) {
          f << "\n(truncated)\n";
          break;
        }
      }
    }
    f << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capbound: capacitary metrics, boundaries and traces on planar grids"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help");  // -h is taken by --h

  std::string scene_path, out_dir = ".", function_tag, elements_dir, map_spec, results_dir;
  std::string pairs_file, svg_dir, suite = "boundary";
  double h = 0.0;
  int refine = -1, jobs = 0;
  long long seed = -1;
  bool record_timings = false;

  auto common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "print this help");
    sub->add_option("--scene", scene_path, "scene JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--h", h, "override the scene resolution")->check(CLI::PositiveNumber);
    sub->add_option("--refine", refine, "override the refinement count")->check(CLI::Range(0, 4));
    sub->add_option("--seed", seed, "override the scene seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--jobs", jobs, "worker threads (default: CAPBOUND_JOBS or 1)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--record-timings", record_timings, "fill wall_time columns");
  };
  auto* cap = app.add_subcommand("capacity", "condenser capacity with extrapolation");
  common(cap);
  auto* dist = app.add_subcommand("distance", "capacitary distance upper bounds for scene pairs");
  common(dist);
  dist->add_option("--pairs", pairs_file, "CSV of pairs (x1,y1,x2,y2) replacing the scene pairs")
      ->check(CLI::ExistingFile);
  dist->add_option("--svg", svg_dir, "directory for the curve overlay SVG (default --out)");
  auto* bnd = app.add_subcommand("boundary", "boundary element classification and impressions");
  common(bnd);
  bnd->add_option("--suite", suite, "suite name used for SVG files")
      ->check(CLI::IsMember({"disk", "slit", "comb", "fan"}));
  auto* trc = app.add_subcommand("trace", "function traces along boundary elements and Luzin sets");
  common(trc);
  trc->add_option("--function", function_tag, "catalog tag")->required();
  trc->add_option("--elements", elements_dir, "directory holding elements.json from `boundary`");
  auto* inv = app.add_subcommand("invariance", "capacity ratios under an explicit map");
  common(inv);
  inv->add_option("--map", map_spec, "map spec, e.g. disk_automorphism:0.3,0")->required();
  auto* rep = app.add_subcommand("report", "aggregate a results directory");
  rep->set_help_flag("--help", "print this help");
  rep->add_option("--results", results_dir, "directory of subcommand outputs")->required();
  rep->add_option("--out", out_dir, "summary file (default <results>/report.md)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rep->parsed()) {
      const fs::path target = out_dir == "." ? fs::path(results_dir) / "report.md" : fs::path(out_dir);
      run_report(results_dir, target);
      std::cout << target.string() << "\n";
      return 0;
    }
    Run run;
    run.subcommand = app.get_subcommands().front()->get_name();
    run.scene = load_scene(scene_path);
    if (h > 0) run.scene.h = h;
    if (refine >= 0) run.scene.refine = refine;
    if (seed >= 0) run.scene.seed = static_cast<std::uint64_t>(seed);
    run.out = out_dir;
    run.svg_dir = svg_dir;
    run.jobs = resolve_jobs(jobs);
    run.record_timings = record_timings;
    fs::create_directories(run.out);

    if (cap->parsed()) run_capacity(run);
    else if (dist->parsed()) run_distance(run, pairs_file);
    else if (bnd->parsed()) run_boundary(run, suite);
    else if (trc->parsed()) run_trace(run, function_tag, elements_dir);
    else if (inv->parsed()) run_invariance(run, map_spec);
    run.write_manifest();
    for (const auto& o : run.outputs) std::cout << (run.out / o).string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "capbound: " << e.what() << "\n";
    return is_numerical_failure(e) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "capbound: internal error: " << e.what() << "\n";
    return 1;
  }
}
