#include "capbound/scene.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace capbound {

namespace {

using json = nlohmann::json;

/// Object view that records which keys were read so leftovers can be
/// rejected with their path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  static void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(at(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key) { return as_number(raw(key), at(key)); }
  double number(const std::string& key, double def) { return has(key) ? number(key) : def; }

  int integer(const std::string& key) { return as_int(raw(key), at(key)); }
  int integer(const std::string& key, int def) { return has(key) ? integer(key) : def; }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(at(key), "expected a boolean");
    return v.get<bool>();
  }

  Point point(const std::string& key) { return as_point(raw(key), at(key)); }

  Reader child(const std::string& key) { return Reader(raw(key), at(key)); }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown field");
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }
  static int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }
  static Point as_point(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected [x, y]");
    return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]")};
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<Point> point_list(const json& v, const std::string& path) {
  if (!v.is_array()) Reader::fail(path, "expected an array of points");
  std::vector<Point> out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(Reader::as_point(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) Reader::fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(Reader::as_number(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

void positive(double x, const std::string& path) {
  if (!(x > 0)) Reader::fail(path, "must be positive");
}

Shape parse_shape(const json& j, const std::string& path) {
  Reader r(j, path);
  const std::string type = r.string("type");
  Shape s;
  if (type == "segment") {
    s = Segment{r.point("a"), r.point("b")};
  } else if (type == "arc") {
    Arc a{r.point("center"), r.number("radius"), r.number("theta0"), r.number("theta1")};
    positive(a.radius, r.at("radius"));
    s = a;
  } else if (type == "disk") {
    Disk d{r.point("center"), r.number("radius")};
    positive(d.radius, r.at("radius"));
    s = d;
  } else if (type == "annulus") {
    Annulus a{r.point("center"), r.number("inner"), r.number("outer")};
    if (!(a.inner > 0 && a.outer > a.inner)) r.fail(r.at("outer"), "needs 0 < inner < outer");
    s = a;
  } else if (type == "rect") {
    Rect q{r.point("lo"), r.point("hi")};
    if (!(q.lo.x() < q.hi.x() && q.lo.y() < q.hi.y())) r.fail(r.at("hi"), "needs lo < hi");
    s = q;
  } else if (type == "polygon") {
    Polygon p{point_list(r.raw("vertices"), r.at("vertices"))};
    if (p.vertices.size() < 3) r.fail(r.at("vertices"), "needs at least 3 vertices");
    s = p;
  } else {
    r.fail(r.at("type"), "unknown shape type '" + type + "'");
  }
  r.done();
  return s;
}

std::vector<Shape> shape_list(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) Reader::fail(path, "expected a non-empty array of shapes");
  std::vector<Shape> out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(parse_shape(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

PlateSpec parse_plate(const json& j, const std::string& path) {
  Reader r(j, path);
  const std::string role = r.string("role");
  PlateSpec p;
  if (role == "boundary") {
    p = PlateSpec::boundary();
  } else if (role == "inner") {
    p = PlateSpec::inner(shape_list(r.raw("shapes"), r.at("shapes")));
  } else {
    r.fail(r.at("role"), "expected 'boundary' or 'inner'");
  }
  r.done();
  return p;
}

DomainSpec parse_domain(const json& j, const std::string& path) {
  Reader r(j, path);
  const std::string kind = r.string("kind");
  DomainSpec d;
  if (kind == "disk") {
    DiskDomain dd{r.point("center"), r.number("radius")};
    positive(dd.radius, r.at("radius"));
    d = dd;
  } else if (kind == "rectangle") {
    RectDomain rd{r.point("lo"), r.point("hi")};
    if (!(rd.lo.x() < rd.hi.x() && rd.lo.y() < rd.hi.y())) r.fail(r.at("hi"), "needs lo < hi");
    d = rd;
  } else if (kind == "slit_disk") {
    SlitDiskDomain sd;
    sd.radius = r.number("radius");
    positive(sd.radius, r.at("radius"));
    const json& slits = r.raw("slits");
    if (!slits.is_array()) r.fail(r.at("slits"), "expected an array of [a, b] segments");
    for (std::size_t k = 0; k < slits.size(); ++k) {
      const auto pts = point_list(slits[k], r.at("slits") + "[" + std::to_string(k) + "]");
      if (pts.size() != 2) r.fail(r.at("slits") + "[" + std::to_string(k) + "]", "expected [a, b]");
      sd.slits.push_back({pts[0], pts[1]});
    }
    d = sd;
  } else if (kind == "comb") {
    CombDomain c{r.integer("levels")};
    if (c.levels < 1) r.fail(r.at("levels"), "must be >= 1");
    d = c;
  } else if (kind == "cantor_fan") {
    CantorFanDomain c{r.integer("depth")};
    if (c.depth < 1) r.fail(r.at("depth"), "must be >= 1");
    d = c;
  } else if (kind == "polygon") {
    PolygonDomain p{point_list(r.raw("vertices"), r.at("vertices"))};
    if (p.vertices.size() < 3) r.fail(r.at("vertices"), "needs at least 3 vertices");
    d = p;
  } else if (kind == "snowflake") {
    SnowflakeDomain s{r.integer("iterations")};
    if (s.iterations < 0) r.fail(r.at("iterations"), "must be >= 0");
    d = s;
  } else {
    r.fail(r.at("kind"), "unknown domain kind '" + kind + "'");
  }
  r.done();
  return d;
}

Region parse_region(const json& j, const std::string& path) {
  const Shape s = parse_shape(j, path);
  if (const auto* d = std::get_if<Disk>(&s)) return *d;
  if (const auto* q = std::get_if<Rect>(&s)) return *q;
  Reader::fail(path, "V must be a disk or a rect");
  return {};
}

MemberSpec parse_member(const json& j, const std::string& path) {
  Reader r(j, path);
  const std::string kind = r.string("kind");
  MemberSpec m;
  if (kind == "approach") {
    ApproachMember a{r.point("target"), r.point("direction"), r.number("start"), r.integer("depth"),
                     r.number("rate", 2.0)};
    if (std::abs(a.direction.norm() - 1) > 1e-9) r.fail(r.at("direction"), "must be a unit vector");
    m = a;
  } else if (kind == "radial") {
    m = RadialMember{r.point("center"), r.number("radius"), r.number("theta"), r.integer("depth"),
                     r.number("rate", 2.0)};
  } else if (kind == "comb_channel") {
    m = CombChannelMember{r.number("x"), r.integer("levels")};
  } else if (kind == "fan_sector") {
    m = FanSectorMember{r.integer("sector"), r.integer("depth")};
  } else {
    r.fail(r.at("kind"), "unknown member kind '" + kind + "'");
  }
  r.done();
  return m;
}

/// Sample points of a shape used for containment checks.
std::vector<Point> shape_samples(const Shape& s) {
  std::vector<Point> pts;
  auto circle = [&](const Point& c, double rad) {
    for (int k = 0; k < 360; ++k) {
      const double t = 2 * std::numbers::pi * k / 360;
      pts.emplace_back(c.x() + rad * std::cos(t), c.y() + rad * std::sin(t));
    }
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Segment>) {
          for (int k = 0; k <= 64; ++k) pts.push_back(v.a + (v.b - v.a) * (k / 64.0));
        } else if constexpr (std::is_same_v<T, Arc>) {
          for (int k = 0; k <= 64; ++k) {
            const double t = v.theta0 + (v.theta1 - v.theta0) * k / 64.0;
            pts.emplace_back(v.center.x() + v.radius * std::cos(t), v.center.y() + v.radius * std::sin(t));
          }
        } else if constexpr (std::is_same_v<T, Disk>) {
          circle(v.center, v.radius);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          circle(v.center, v.outer);
        } else if constexpr (std::is_same_v<T, Rect>) {
          for (int k = 0; k <= 64; ++k) {
            const double t = k / 64.0;
            pts.emplace_back(v.lo.x() + t * (v.hi.x() - v.lo.x()), v.lo.y());
            pts.emplace_back(v.lo.x() + t * (v.hi.x() - v.lo.x()), v.hi.y());
            pts.emplace_back(v.lo.x(), v.lo.y() + t * (v.hi.y() - v.lo.y()));
            pts.emplace_back(v.hi.x(), v.lo.y() + t * (v.hi.y() - v.lo.y()));
          }
        } else {
          const std::size_t n = v.vertices.size();
          for (std::size_t k = 0; k < n; ++k)
            for (int q = 0; q < 16; ++q)
              pts.push_back(v.vertices[k] + (v.vertices[(k + 1) % n] - v.vertices[k]) * (q / 16.0));
        }
      },
      s);
  return pts;
}

void check_plate_inside(const PlateSpec& p, const DomainSpec& d, const std::string& path) {
  for (std::size_t k = 0; k < p.geometry.size(); ++k)
    for (const auto& q : shape_samples(p.geometry[k]))
      if (!domain_contains(d, q))
        Reader::fail(path + ".shapes[" + std::to_string(k) + "]", "leaves the open domain");
}

}  // namespace

BoundarySequence make_sequence(const MemberSpec& spec, double h) {
  return std::visit(
      [&](const auto& m) -> BoundarySequence {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ApproachMember>) {
          return approach_sequence(m.target, m.direction, m.start, m.depth, m.rate, "approach");
        } else if constexpr (std::is_same_v<T, RadialMember>) {
          return radial_sequence(m.center, m.radius, m.theta, m.depth, m.rate);
        } else if constexpr (std::is_same_v<T, CombChannelMember>) {
          return comb_channel_sequence(m.x, m.levels);
        } else {
          return fan_sector_sequence(m.sector, m.depth, h);
        }
      },
      spec);
}

MetricConfig Scene::metric_config() const {
  if (!metric) throw ValidationError("scene.metric: missing required section");
  MetricConfig c;
  c.domain = domain;
  c.F = metric->F;
  c.V = metric->V;
  c.h = h;
  c.budget = metric->budget;
  c.seed = seed;
  c.tol = metric->tol;
  return c;
}

Scene parse_scene(const std::string& text, const std::string& name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scene: malformed JSON: ") + e.what());
  }
  Scene s;
  s.name = name;
  s.canonical = j.dump();
  Reader r(j, "scene");
  s.domain = parse_domain(r.raw("domain"), r.at("domain"));
  if (r.has("resolution")) {
    Reader res = r.child("resolution");
    s.h = res.number("h", s.h);
    positive(s.h, res.at("h"));
    s.refine = res.integer("refine", s.refine);
    if (s.refine < 0 || s.refine > 4) res.fail(res.at("refine"), "must lie in 0..4");
    res.done();
  }
  if (r.has("seed")) {
    const json& v = r.raw("seed");
    if (!v.is_number_unsigned()) r.fail(r.at("seed"), "expected a non-negative integer");
    s.seed = v.get<std::uint64_t>();
  }
  if (r.has("condenser")) {
    Reader c = r.child("condenser");
    Condenser cd{s.domain, parse_plate(c.raw("plate0"), c.at("plate0")),
                 parse_plate(c.raw("plate1"), c.at("plate1"))};
    check_plate_inside(cd.plate0, s.domain, c.at("plate0"));
    check_plate_inside(cd.plate1, s.domain, c.at("plate1"));
    c.done();
    s.condenser = cd;
  }
  if (r.has("metric")) {
    Reader m = r.child("metric");
    MetricScene ms{PlateSpec::inner(shape_list(m.raw("F"), m.at("F"))),
                   parse_region(m.raw("V"), m.at("V")), {}, m.number("tol", 1e-8)};
    if (!(ms.tol > 0 && ms.tol < 1)) m.fail(m.at("tol"), "must lie in (0, 1)");
    if (m.has("budget")) {
      Reader b = m.child("budget");
      ms.budget.vertices = b.integer("vertices", ms.budget.vertices);
      ms.budget.iterations = b.integer("iterations", ms.budget.iterations);
      ms.budget.coarse_factor = b.integer("coarse_factor", ms.budget.coarse_factor);
      ms.budget.detours = b.integer("detours", ms.budget.detours);
      if (ms.budget.vertices < 2) b.fail(b.at("vertices"), "must be >= 2");
      if (ms.budget.iterations < 0) b.fail(b.at("iterations"), "must be >= 0");
      if (ms.budget.coarse_factor < 1) b.fail(b.at("coarse_factor"), "must be >= 1");
      if (ms.budget.detours < 0) b.fail(b.at("detours"), "must be >= 0");
      b.done();
    }
    for (std::size_t k = 0; k < ms.F.geometry.size(); ++k)
      for (const auto& q : shape_samples(ms.F.geometry[k]))
        if (!contains(ms.V, q)) m.fail(m.at("F") + "[" + std::to_string(k) + "]", "not contained in V");
    const Shape vshape = std::visit([](const auto& v) -> Shape { return v; }, ms.V);
    for (const auto& q : shape_samples(vshape))
      if (!domain_contains(s.domain, q)) m.fail(m.at("V"), "leaves the open domain");
    m.done();
    s.metric = ms;
  }
  if (r.has("pairs")) {
    const json& v = r.raw("pairs");
    if (!v.is_array()) r.fail(r.at("pairs"), "expected an array of [p, q] pairs");
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::string p = r.at("pairs") + "[" + std::to_string(k) + "]";
      const auto pts = point_list(v[k], p);
      if (pts.size() != 2) r.fail(p, "expected [p, q]");
      for (const auto& q : pts)
        if (!domain_contains(s.domain, q)) r.fail(p, "point outside the open domain");
      s.pairs.emplace_back(pts[0], pts[1]);
    }
  }
  if (r.has("boundary")) {
    Reader b = r.child("boundary");
    BoundaryScene bs;
    bs.tol = b.number("tol", bs.tol);
    positive(bs.tol, b.at("tol"));
    if (b.has("eps")) bs.eps = number_list(b.raw("eps"), b.at("eps"));
    if (b.has("realization")) {
      Reader q = b.child("realization");
      bs.realization.band = q.number("band", bs.realization.band);
      bs.realization.stride = q.integer("stride", bs.realization.stride);
      bs.realization.core = q.number("core", bs.realization.core);
      bs.realization.window = q.number("window", bs.realization.window);
      if (bs.realization.window < 0) q.fail(q.at("window"), "must be >= 0");
      if (bs.realization.stride < 1) q.fail(q.at("stride"), "must be >= 1");
      q.done();
    }
    if (b.has("elements")) {
      const json& els = b.raw("elements");
      if (!els.is_array()) b.fail(b.at("elements"), "expected an array");
      for (std::size_t k = 0; k < els.size(); ++k) {
        Reader e(els[k], b.at("elements") + "[" + std::to_string(k) + "]");
        ElementSpec es{e.string("label"), {}};
        const json& mem = e.raw("members");
        if (!mem.is_array() || mem.empty()) e.fail(e.at("members"), "expected a non-empty array");
        for (std::size_t q = 0; q < mem.size(); ++q)
          es.members.push_back(parse_member(mem[q], e.at("members") + "[" + std::to_string(q) + "]"));
        e.done();
        bs.elements.push_back(std::move(es));
      }
    }
    if (b.has("comb_collapse")) {
      Reader c = b.child("comb_collapse");
      CombCollapseSpec cc{c.integer("levels", 3), c.number("x1", -0.5), c.number("x2", 0.5)};
      c.done();
      bs.comb_collapse = cc;
    }
    b.done();
    s.boundary = bs;
  }
  if (r.has("trace")) {
    Reader t = r.child("trace");
    TraceScene ts;
    ts.h = t.number("h", 0.0);
    if (ts.h < 0) t.fail(t.at("h"), "must be >= 0");
    if (t.has("eps")) ts.eps = number_list(t.raw("eps"), t.at("eps"));
    if (t.has("z0")) ts.z0 = t.point("z0");
    ts.strong = t.boolean("strong", false);
    t.done();
    s.trace = ts;
  }
  r.done();
  return s;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scene: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), std::filesystem::path(path).stem().string());
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace capbound
