#include "capbound/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace capbound {

namespace {

constexpr double kPi = std::numbers::pi;

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool point_in_polygon(const std::vector<Point>& poly, const Point& p) {
  bool in = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) in = !in;
    }
  }
  return in;
}

double polygon_perimeter(const std::vector<Point>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) s += (poly[(i + 1) % poly.size()] - poly[i]).norm();
  return s;
}

double min_edge(const std::vector<Point>& poly) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i)
    m = std::min(m, (poly[(i + 1) % poly.size()] - poly[i]).norm());
  return m;
}

// Narrowest channel: smallest distance between two edges whose boundary arc
// (the shorter way round, excluding both edges) exceeds twice that distance.
// Finely sampled smooth outlines have arc about equal to chord and never count.
double channel_width(const std::vector<Point>& poly) {
  const std::size_t n = poly.size();
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + (poly[(i + 1) % n] - poly[i]).norm();
  const double total = cum[n];
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const double inner = cum[j] - cum[i + 1];
      const double arc = std::min(inner, total - inner - (cum[i + 1] - cum[i]) - (cum[j + 1] - cum[j]));
      const Point &a = poly[i], &b = poly[(i + 1) % n], &c = poly[j], &d = poly[(j + 1) % n];
      const double dist = std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                                    point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
      if (arc > 2 * dist) m = std::min(m, dist);
    }
  return m;
}

std::vector<Segment> polygon_edges(const std::vector<Point>& poly) {
  std::vector<Segment> e;
  e.reserve(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) e.push_back({poly[i], poly[(i + 1) % poly.size()]});
  return e;
}

struct Box {
  Point lo, hi;
};

Box cell_box(const GridMask& mask, int idx, double grow) {
  const Point c = mask.center(idx);
  const double r = 0.5 * mask.h() + grow;
  return {c - Point(r, r), c + Point(r, r)};
}

bool box_contains(const Box& b, const Point& p) {
  return p.x() >= b.lo.x() && p.x() <= b.hi.x() && p.y() >= b.lo.y() && p.y() <= b.hi.y();
}

// Liang-Barsky clip against a closed box.
bool segment_meets_box(const Point& a, const Point& b, const Box& box) {
  double t0 = 0.0, t1 = 1.0;
  const Point d = b - a;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    const double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
    return true;
  };
  return clip(-d.x(), a.x() - box.lo.x()) && clip(d.x(), box.hi.x() - a.x()) &&
         clip(-d.y(), a.y() - box.lo.y()) && clip(d.y(), box.hi.y() - a.y()) && t0 <= t1;
}

double box_min_distance(const Box& b, const Point& p) {
  const double dx = std::max({b.lo.x() - p.x(), 0.0, p.x() - b.hi.x()});
  const double dy = std::max({b.lo.y() - p.y(), 0.0, p.y() - b.hi.y()});
  return std::hypot(dx, dy);
}

double box_max_distance(const Box& b, const Point& p) {
  const double dx = std::max(std::abs(b.lo.x() - p.x()), std::abs(b.hi.x() - p.x()));
  const double dy = std::max(std::abs(b.lo.y() - p.y()), std::abs(b.hi.y() - p.y()));
  return std::hypot(dx, dy);
}

std::vector<Segment> arc_segments(const Arc& arc, double h) {
  double sweep = arc.theta1 - arc.theta0;
  if (sweep < 0) sweep += 2 * kPi;
  // sagitta r(1-cos(dt/2)) <= 1e-4 h
  const double max_dt = 2.0 * std::acos(std::max(-1.0, 1.0 - 1e-4 * h / arc.radius));
  const int n = std::max(1, static_cast<int>(std::ceil(sweep / std::max(max_dt, 1e-6))));
  std::vector<Segment> segs;
  Point prev = arc.center + arc.radius * Point(std::cos(arc.theta0), std::sin(arc.theta0));
  for (int k = 1; k <= n; ++k) {
    const double t = arc.theta0 + sweep * k / n;
    const Point next = arc.center + arc.radius * Point(std::cos(t), std::sin(t));
    segs.push_back({prev, next});
    prev = next;
  }
  return segs;
}

Box shape_bounds(const Shape& s) {
  return std::visit(
      [](const auto& g) -> Box {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Segment>) {
          return {g.a.cwiseMin(g.b), g.a.cwiseMax(g.b)};
        } else if constexpr (std::is_same_v<T, Arc> || std::is_same_v<T, Disk>) {
          return {g.center.array() - g.radius, g.center.array() + g.radius};
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return {g.center.array() - g.outer, g.center.array() + g.outer};
        } else if constexpr (std::is_same_v<T, Rect>) {
          return {g.lo, g.hi};
        } else {
          Point lo = g.vertices.front(), hi = g.vertices.front();
          for (const auto& v : g.vertices) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
          }
          return {lo, hi};
        }
      },
      s);
}

bool shape_meets_box(const Shape& s, const Box& box, double h) {
  return std::visit(
      [&](const auto& g) -> bool {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Segment>) {
          return segment_meets_box(g.a, g.b, box);
        } else if constexpr (std::is_same_v<T, Arc>) {
          for (const auto& seg : arc_segments(g, h))
            if (segment_meets_box(seg.a, seg.b, box)) return true;
          return false;
        } else if constexpr (std::is_same_v<T, Disk>) {
          return box_min_distance(box, g.center) <= g.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return box_min_distance(box, g.center) <= g.outer &&
                 box_max_distance(box, g.center) >= g.inner;
        } else if constexpr (std::is_same_v<T, Rect>) {
          return g.lo.x() <= box.hi.x() && g.hi.x() >= box.lo.x() && g.lo.y() <= box.hi.y() &&
                 g.hi.y() >= box.lo.y();
        } else {
          for (const auto& v : g.vertices)
            if (box_contains(box, v)) return true;
          if (point_in_polygon(g.vertices, 0.5 * (box.lo + box.hi))) return true;
          for (const auto& e : polygon_edges(g.vertices))
            if (segment_meets_box(e.a, e.b, box)) return true;
          return false;
        }
      },
      s);
}

// Exact traversal of half-open lattice cells [(i-1/2)h, (i+1/2)h) along a->b.
template <typename Fn>
void traverse(const Point& a, const Point& b, double h, Fn&& visit) {
  const double ux = a.x() / h + 0.5, uy = a.y() / h + 0.5;
  const double vx = b.x() / h + 0.5, vy = b.y() / h + 0.5;
  int i = static_cast<int>(std::floor(ux)), j = static_cast<int>(std::floor(uy));
  const int iend = static_cast<int>(std::floor(vx)), jend = static_cast<int>(std::floor(vy));
  visit(i, j);
  const double dx = vx - ux, dy = vy - uy;
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double tmx = sx > 0 ? (i + 1 - ux) / dx : (sx < 0 ? (i - ux) / dx : inf);
  double tmy = sy > 0 ? (j + 1 - uy) / dy : (sy < 0 ? (j - uy) / dy : inf);
  const double tdx = sx != 0 ? 1.0 / std::abs(dx) : inf;
  const double tdy = sy != 0 ? 1.0 / std::abs(dy) : inf;
  int guard = std::abs(iend - i) + std::abs(jend - j) + 2;
  while ((i != iend || j != jend) && guard-- > 0) {
    const double tol = 1e-12 * std::max(1.0, std::min(tmx, tmy));
    if (tmx < tmy - tol) {
      i += sx;
      tmx += tdx;
    } else if (tmy < tmx - tol) {
      j += sy;
      tmy += tdy;
    } else {
      i += sx;
      j += sy;
      tmx += tdx;
      tmy += tdy;
    }
    visit(i, j);
  }
}

void sort_unique(CellSet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

// 1-D squared distance transform (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  constexpr double big = 1e20;
  int k = 0;
  v[0] = 0;
  z[0] = -big;
  z[1] = big;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
      if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[static_cast<std::size_t>(k)]) {
      v[static_cast<std::size_t>(k)] = q;
      z[static_cast<std::size_t>(k) + 1] = big;
      continue;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = big;
  }
  k = 0;
  d.assign(static_cast<std::size_t>(n), 0.0);
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    d[static_cast<std::size_t>(q)] = double(q - p) * (q - p) + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace

double Polyline::length() const {
  double s = 0.0;
  for (std::size_t k = 1; k < vertices.size(); ++k) s += (vertices[k] - vertices[k - 1]).norm();
  return s;
}

Polyline Polyline::reversed() const {
  Polyline r{vertices};
  std::reverse(r.vertices.begin(), r.vertices.end());
  return r;
}

Polyline make_polyline(std::vector<Point> vertices) {
  if (vertices.size() < 2) throw PreconditionError("polyline needs at least 2 vertices");
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    if (!vertices[k].allFinite()) throw PreconditionError("polyline vertex not finite");
    if (k > 0 && vertices[k] == vertices[k - 1])
      throw PreconditionError("polyline has repeated consecutive vertices");
  }
  return Polyline{std::move(vertices)};
}

bool contains(const Region& region, const Point& p) {
  return std::visit(
      [&](const auto& g) -> bool {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return (p - g.center).norm() <= g.radius;
        } else {
          return p.x() >= g.lo.x() && p.x() <= g.hi.x() && p.y() >= g.lo.y() && p.y() <= g.hi.y();
        }
      },
      region);
}

std::string kind_name(const DomainSpec& domain) {
  static const char* names[] = {"disk",     "rectangle", "slit_disk", "comb",
                                "cantor_fan", "polygon", "snowflake"};
  return names[domain.index()];
}

std::vector<Point> snowflake_vertices(int iterations) {
  if (iterations < 0) throw PreconditionError("snowflake iterations must be >= 0");
  std::vector<Point> pts;
  for (int k = 0; k < 3; ++k) {
    const double t = kPi / 2 + 2 * kPi * k / 3;
    pts.emplace_back(std::cos(t), std::sin(t));
  }
  // Vertices are ccw; the outward normal of edge a->b is its clockwise rotation.
  for (int it = 0; it < iterations; ++it) {
    std::vector<Point> next;
    next.reserve(pts.size() * 4);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Point a = pts[k];
      const Point b = pts[(k + 1) % pts.size()];
      const Point d = (b - a) / 3.0;
      const Point p1 = a + d;
      const Point p3 = a + 2 * d;
      const Point outward(d.y(), -d.x());
      const Point p2 = 0.5 * (p1 + p3) + outward * (std::sqrt(3.0) / 2.0);
      next.push_back(a);
      next.push_back(p1);
      next.push_back(p2);
      next.push_back(p3);
    }
    pts = std::move(next);
  }
  return pts;
}

DomainGeometry describe(const DomainSpec& domain) {
  return std::visit(
      [](const auto& d) -> DomainGeometry {
        using T = std::decay_t<decltype(d)>;
        DomainGeometry g;
        if constexpr (std::is_same_v<T, DiskDomain>) {
          if (!(d.radius > 0)) throw PreconditionError("disk radius must be positive");
          g.lo = d.center.array() - d.radius;
          g.hi = d.center.array() + d.radius;
          const Point c = d.center;
          const double r = d.radius;
          g.inside = [c, r](const Point& p) { return (p - c).norm() < r; };
          g.boundary_circles.push_back({c, r});
          g.thinnest_feature = 2 * r;
          g.perimeter = 2 * kPi * r;
        } else if constexpr (std::is_same_v<T, RectDomain>) {
          if (!(d.hi.x() > d.lo.x() && d.hi.y() > d.lo.y()))
            throw PreconditionError("rectangle corners out of order");
          g.lo = d.lo;
          g.hi = d.hi;
          const Point lo = d.lo, hi = d.hi;
          g.inside = [lo, hi](const Point& p) {
            return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y();
          };
          g.boundary_segments = polygon_edges({lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}});
          g.thinnest_feature = (hi - lo).minCoeff();
          g.perimeter = 2 * ((hi - lo).sum());
        } else if constexpr (std::is_same_v<T, SlitDiskDomain>) {
          if (!(d.radius > 0)) throw PreconditionError("slit disk radius must be positive");
          g.lo = Point::Constant(-d.radius);
          g.hi = Point::Constant(d.radius);
          const double r = d.radius;
          g.inside = [r](const Point& p) { return p.norm() < r; };
          g.boundary_circles.push_back({Point::Zero(), r});
          g.slits = d.slits;
          g.thinnest_feature = 2 * r;
          g.perimeter = 2 * kPi * r;
          for (const auto& s : d.slits) {
            const double len = (s.b - s.a).norm();
            g.thinnest_feature = std::min(g.thinnest_feature, len);
            g.perimeter += 2 * len;
          }
        } else if constexpr (std::is_same_v<T, CombDomain>) {
          if (d.levels < 1) throw PreconditionError("comb levels must be >= 1");
          g.lo = Point(-2, 0);
          g.hi = Point(2, 1);
          g.inside = [](const Point& p) {
            return p.x() > -2 && p.x() < 2 && p.y() > 0 && p.y() < 1;
          };
          g.boundary_segments = polygon_edges({{-2, 0}, {2, 0}, {2, 1}, {-2, 1}});
          g.perimeter = 10;
          for (int n = 1; n <= d.levels; ++n) {
            const double y1 = std::pow(3.0, -n);
            g.slits.push_back({{-2, 2 * y1}, {1, 2 * y1}});
            g.slits.push_back({{-1, y1}, {2, y1}});
            g.perimeter += 12;
          }
          g.thinnest_feature = std::pow(3.0, -d.levels);
        } else if constexpr (std::is_same_v<T, CantorFanDomain>) {
          if (d.depth < 1) throw PreconditionError("cantor fan depth must be >= 1");
          g.lo = Point(-2, -2);
          g.hi = Point(2, 2);
          g.inside = [](const Point& p) { return p.norm() < 2; };
          g.boundary_circles.push_back({Point::Zero(), 2});
          g.slits.push_back({Point::Zero(), Point(1, 0)});
          for (int n = 1; n <= d.depth; ++n) {
            const int m = 1 << n;
            const double len = 1.0 / m;
            for (int p = 1; p < m; p += 2) {
              const double t = 2 * kPi * p / m;
              g.slits.push_back({Point::Zero(), len * Point(std::cos(t), std::sin(t))});
            }
          }
          g.thinnest_feature = std::pow(2.0, -d.depth);
          g.perimeter = 4 * kPi;
          for (const auto& s : g.slits) g.perimeter += 2 * (s.b - s.a).norm();
        } else {
          std::vector<Point> poly;
          if constexpr (std::is_same_v<T, PolygonDomain>) {
            poly = d.vertices;
          } else {
            poly = snowflake_vertices(d.iterations);
          }
          if (poly.size() < 3) throw PreconditionError("polygon needs at least 3 vertices");
          g.lo = poly.front();
          g.hi = poly.front();
          for (const auto& v : poly) {
            g.lo = g.lo.cwiseMin(v);
            g.hi = g.hi.cwiseMax(v);
          }
          g.boundary_segments = polygon_edges(poly);
          // snowflake features sit at edge scale; general outlines may be finely sampled
          g.thinnest_feature = std::is_same_v<T, SnowflakeDomain>
                                   ? min_edge(poly)
                                   : std::min(channel_width(poly), (g.hi - g.lo).minCoeff());
          g.perimeter = polygon_perimeter(poly);
          g.inside = [poly = std::move(poly)](const Point& p) { return point_in_polygon(poly, p); };
        }
        for (const auto& s : g.slits) g.boundary_segments.push_back(s);
        return g;
      },
      domain);
}

bool domain_contains(const DomainSpec& domain, const Point& p) {
  const DomainGeometry g = describe(domain);
  if (!g.inside(p)) return false;
  for (const auto& s : g.slits)
    if (point_segment_distance(p, s.a, s.b) == 0.0) return false;
  return true;
}

double distance_to_boundary(const DomainSpec& domain, const Point& p) {
  const DomainGeometry g = describe(domain);
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : g.boundary_segments) d = std::min(d, point_segment_distance(p, s.a, s.b));
  for (const auto& c : g.boundary_circles) d = std::min(d, std::abs((p - c.center).norm() - c.radius));
  return d;
}

double comb_channel_cells(int level, double h) { return std::pow(3.0, -level) / h; }

GridMask::GridMask(double h, int i0, int j0, int nx, int ny)
    : h_(h), i0_(i0), j0_(j0), nx_(nx), ny_(ny),
      labels_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), Cell::Exterior) {}

Point GridMask::center(int idx) const {
  return {(i0_ + col(idx)) * h_, (j0_ + row(idx)) * h_};
}

int GridMask::locate(const Point& p) const {
  const int gi = static_cast<int>(std::floor(p.x() / h_ + 0.5));
  const int gj = static_cast<int>(std::floor(p.y() / h_ + 0.5));
  return from_lattice(gi, gj);
}

int GridMask::from_lattice(int gi, int gj) const {
  const int i = gi - i0_, j = gj - j0_;
  return in_range(i, j) ? index(i, j) : -1;
}

CellSet GridMask::cells_with(Cell c) const {
  CellSet out;
  for (int k = 0; k < size(); ++k)
    if (label(k) == c) out.push_back(k);
  return out;
}

int GridMask::count(Cell c) const {
  return static_cast<int>(std::count(labels_.begin(), labels_.end(), c));
}

GridMask build_mask(const DomainSpec& domain, double h) {
  if (!(h > 0) || !std::isfinite(h)) throw PreconditionError("cell size must be positive");
  const DomainGeometry g = describe(domain);
  if (g.thinnest_feature < 3 * h * (1 - 1e-9))
    throw UnresolvedFeature(kind_name(domain) + ": thinnest feature " +
                            std::to_string(g.thinnest_feature) + " spans fewer than 3 cells at h=" +
                            std::to_string(h));
  const int imin = static_cast<int>(std::floor(g.lo.x() / h)) - 1;
  const int jmin = static_cast<int>(std::floor(g.lo.y() / h)) - 1;
  const int imax = static_cast<int>(std::ceil(g.hi.x() / h)) + 1;
  const int jmax = static_cast<int>(std::ceil(g.hi.y() / h)) + 1;
  GridMask mask(h, imin, jmin, imax - imin + 1, jmax - jmin + 1);

  std::vector<char> blocked(static_cast<std::size_t>(mask.size()), 0);
  for (const auto& s : g.slits)
    traverse(s.a, s.b, h, [&](int gi, int gj) {
      const int idx = mask.from_lattice(gi, gj);
      if (idx >= 0) blocked[static_cast<std::size_t>(idx)] = 1;
    });
  for (int k = 0; k < mask.size(); ++k)
    if (!blocked[static_cast<std::size_t>(k)] && g.inside(mask.center(k)))
      mask.set_label(k, Cell::Interior);

  // Keep the largest 4-connected interior component.
  std::vector<int> comp(static_cast<std::size_t>(mask.size()), -1);
  int best = -1, best_size = 0, ncomp = 0;
  for (int k = 0; k < mask.size(); ++k) {
    if (mask.label(k) != Cell::Interior || comp[static_cast<std::size_t>(k)] >= 0) continue;
    int sz = 0;
    std::vector<int> stack{k};
    comp[static_cast<std::size_t>(k)] = ncomp;
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      ++sz;
      mask.for_each_neighbor4(c, [&](int n) {
        if (mask.label(n) == Cell::Interior && comp[static_cast<std::size_t>(n)] < 0) {
          comp[static_cast<std::size_t>(n)] = ncomp;
          stack.push_back(n);
        }
      });
    }
    if (sz > best_size) {
      best_size = sz;
      best = ncomp;
    }
    ++ncomp;
  }
  if (best < 0) throw UnresolvedFeature(kind_name(domain) + ": no interior cells at h=" + std::to_string(h));
  for (int k = 0; k < mask.size(); ++k)
    if (mask.label(k) == Cell::Interior && comp[static_cast<std::size_t>(k)] != best)
      mask.set_label(k, Cell::Exterior);
  for (int k = 0; k < mask.size(); ++k) {
    if (mask.label(k) != Cell::Exterior) continue;
    bool adj = false;
    mask.for_each_neighbor4(k, [&](int n) { adj = adj || mask.label(n) == Cell::Interior; });
    if (adj) mask.set_label(k, Cell::Boundary);
  }
  return mask;
}

CellSet rasterize_shapes(const std::vector<Shape>& shapes, const GridMask& mask) {
  CellSet out;
  const double h = mask.h();
  const double grow = 1e-9 * h;
  for (const auto& s : shapes) {
    const Box b = shape_bounds(s);
    const int gi0 = static_cast<int>(std::floor((b.lo.x() - grow) / h + 0.5)) - 1;
    const int gj0 = static_cast<int>(std::floor((b.lo.y() - grow) / h + 0.5)) - 1;
    const int gi1 = static_cast<int>(std::floor((b.hi.x() + grow) / h + 0.5)) + 1;
    const int gj1 = static_cast<int>(std::floor((b.hi.y() + grow) / h + 0.5)) + 1;
    for (int gj = gj0; gj <= gj1; ++gj)
      for (int gi = gi0; gi <= gi1; ++gi) {
        const int idx = mask.from_lattice(gi, gj);
        if (idx < 0 || mask.label(idx) == Cell::Exterior) continue;
        if (shape_meets_box(s, cell_box(mask, idx, grow), h)) out.push_back(idx);
      }
  }
  sort_unique(out);
  return out;
}

CellSet rasterize_plate(const PlateSpec& plate, const GridMask& mask) {
  if (plate.role == PlateRole::BoundaryPlate) {
    CellSet b = mask.cells_with(Cell::Boundary);
    if (b.empty()) throw EmptyPlate("boundary plate has no cells");
    return b;
  }
  if (plate.geometry.empty()) throw EmptyPlate("inner plate has no geometry");
  CellSet cells = rasterize_shapes(plate.geometry, mask);
  if (cells.empty()) throw EmptyPlate("plate geometry meets no cell of the domain");
  if (!is_connected(cells, mask, true))
    throw PreconditionError("inner continuum plate is not grid-connected");
  return cells;
}

CellSet CurveCells::all() const { return set_union(inside, outside); }

CellSet curve_cover(const Polyline& curve, const GridMask& mask) {
  CellSet out;
  auto visit = [&](int gi, int gj) { out.push_back(mask.from_lattice(gi, gj)); };
  if (curve.vertices.size() == 1) {
    const Point& p = curve.vertices.front();
    traverse(p, p, mask.h(), visit);
  }
  // Each segment is walked from its lexicographically smaller end so that a
  // curve and its reversal cover the same cells.
  for (std::size_t k = 1; k < curve.vertices.size(); ++k) {
    const Point& p = curve.vertices[k - 1];
    const Point& q = curve.vertices[k];
    const bool swap = q.x() < p.x() || (q.x() == p.x() && q.y() < p.y());
    traverse(swap ? q : p, swap ? p : q, mask.h(), visit);
  }
  sort_unique(out);
  return out;
}

bool curve_in_interior(const Polyline& curve, const GridMask& mask) {
  for (int idx : curve_cover(curve, mask))
    if (!mask.is_interior(idx)) return false;
  return true;
}

CurveCells rasterize_curve(const Polyline& curve, const GridMask& mask, const Region& V) {
  CurveCells out;
  for (int idx : curve_cover(curve, mask)) {
    if (!mask.is_interior(idx)) throw CurveEscapesDomain("curve leaves the interior cells");
    (contains(V, mask.center(idx)) ? out.inside : out.outside).push_back(idx);
  }
  return out;
}

CellSet set_union(const CellSet& a, const CellSet& b) {
  CellSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

CellSet set_intersection(const CellSet& a, const CellSet& b) {
  CellSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

CellSet set_difference(const CellSet& a, const CellSet& b) {
  CellSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_connected(const CellSet& cells, const GridMask& mask, bool eight) {
  if (cells.empty()) return true;
  std::vector<char> in(static_cast<std::size_t>(mask.size()), 0), seen(in.size(), 0);
  for (int c : cells) in[static_cast<std::size_t>(c)] = 1;
  std::vector<int> stack{cells.front()};
  seen[static_cast<std::size_t>(cells.front())] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    ++reached;
    const int i = mask.col(c), j = mask.row(c);
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if ((di == 0 && dj == 0) || (!eight && di != 0 && dj != 0)) continue;
        if (!mask.in_range(i + di, j + dj)) continue;
        const int n = mask.index(i + di, j + dj);
        if (in[static_cast<std::size_t>(n)] && !seen[static_cast<std::size_t>(n)]) {
          seen[static_cast<std::size_t>(n)] = 1;
          stack.push_back(n);
        }
      }
  }
  return reached == cells.size();
}

CellSet transfer(const CellSet& cells, const GridMask& from, const GridMask& to) {
  CellSet out;
  if (std::abs(from.h() - to.h()) <= 1e-12 * from.h()) {
    for (int c : cells) {
      const int idx = to.from_lattice(from.i0() + from.col(c), from.j0() + from.row(c));
      if (idx >= 0) out.push_back(idx);
    }
  } else {
    std::vector<char> in(static_cast<std::size_t>(from.size()), 0);
    for (int c : cells) in[static_cast<std::size_t>(c)] = 1;
    for (int k = 0; k < to.size(); ++k) {
      const int src = from.locate(to.center(k));
      if (src >= 0 && in[static_cast<std::size_t>(src)]) out.push_back(k);
    }
  }
  sort_unique(out);
  return out;
}

double diameter(const CellSet& cells, const GridMask& mask) {
  double d2 = 0.0;
  for (std::size_t a = 0; a < cells.size(); ++a) {
    const Point pa = mask.center(cells[a]);
    for (std::size_t b = a + 1; b < cells.size(); ++b)
      d2 = std::max(d2, (mask.center(cells[b]) - pa).squaredNorm());
  }
  return std::sqrt(d2);
}

Eigen::VectorXd boundary_distance(const GridMask& mask) {
  const int nx = mask.nx(), ny = mask.ny();
  constexpr double big = 1e20;
  std::vector<double> grid(static_cast<std::size_t>(mask.size()));
  for (int k = 0; k < mask.size(); ++k) grid[static_cast<std::size_t>(k)] = mask.label(k) == Cell::Boundary ? 0.0 : big;
  std::vector<double> f, d;
  for (int i = 0; i < nx; ++i) {
    f.resize(static_cast<std::size_t>(ny));
    for (int j = 0; j < ny; ++j) f[static_cast<std::size_t>(j)] = grid[static_cast<std::size_t>(mask.index(i, j))];
    edt_1d(f, d);
    for (int j = 0; j < ny; ++j) grid[static_cast<std::size_t>(mask.index(i, j))] = d[static_cast<std::size_t>(j)];
  }
  for (int j = 0; j < ny; ++j) {
    f.resize(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) f[static_cast<std::size_t>(i)] = grid[static_cast<std::size_t>(mask.index(i, j))];
    edt_1d(f, d);
    for (int i = 0; i < nx; ++i) grid[static_cast<std::size_t>(mask.index(i, j))] = d[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd out(mask.size());
  for (int k = 0; k < mask.size(); ++k) out[k] = std::sqrt(grid[static_cast<std::size_t>(k)]) * mask.h();
  return out;
}

int nearest_boundary_cell(const GridMask& mask, const Point& p) {
  const int gi = static_cast<int>(std::floor(p.x() / mask.h() + 0.5)) - mask.i0();
  const int gj = static_cast<int>(std::floor(p.y() / mask.h() + 0.5)) - mask.j0();
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  const int rmax = std::max(mask.nx(), mask.ny());
  for (int r = 0; r <= rmax; ++r) {
    if (best >= 0 && (r - 1) * mask.h() > best_d) break;
    for (int dj = -r; dj <= r; ++dj)
      for (int di = -r; di <= r; ++di) {
        if (std::max(std::abs(di), std::abs(dj)) != r) continue;
        const int i = gi + di, j = gj + dj;
        if (!mask.in_range(i, j)) continue;
        const int idx = mask.index(i, j);
        if (mask.label(idx) != Cell::Boundary) continue;
        const double d = (mask.center(idx) - p).norm();
        if (d < best_d) {
          best_d = d;
          best = idx;
        }
      }
  }
  return best;
}

double interior_area(const GridMask& mask) {
  return mask.count(Cell::Interior) * mask.h() * mask.h();
}

}  // namespace capbound
