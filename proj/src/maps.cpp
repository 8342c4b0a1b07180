#include "capbound/maps.hpp"

#include <algorithm>
#include <sstream>

#include "capbound/parallel.hpp"

namespace capbound {

namespace {

using C = std::complex<double>;

constexpr int kMaxRefineDepth = 16;

void refine_edge(const Map& f, const Point& p, const Point& q, const Point& fp, const Point& fq,
                 double h, int depth, std::vector<Point>& out) {
  const Point mid = 0.5 * (p + q);
  const Point fm = f(mid);
  if (depth >= kMaxRefineDepth || (fm - 0.5 * (fp + fq)).norm() < h) {
    out.push_back(fq);
    return;
  }
  refine_edge(f, p, mid, fp, fm, h, depth + 1, out);
  refine_edge(f, mid, q, fm, fq, h, depth + 1, out);
}

bool is_mobius(const Map& m) { return m.kind == MapKind::Mobius; }

/// Circle through the images of three points of the circle.
Disk mobius_disk(const Map& m, const Point& center, double radius) {
  if (std::abs(m.c) > 0.0) {
    const C pole = -m.d / m.c;
    if (std::abs(pole - C(center.x(), center.y())) <= radius * (1 + 1e-12))
      throw OutsideSource("disk contains the pole of " + m.name());
  }
  const Point w1 = m(Point(center + Point(radius, 0)));
  const Point w2 = m(Point(center + Point(0, radius)));
  const Point w3 = m(Point(center - Point(radius, 0)));
  // Circumcentre of w1, w2, w3.
  const double ax = w1.x(), ay = w1.y(), bx = w2.x(), by = w2.y(), cx = w3.x(), cy = w3.y();
  const double den = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
  if (std::abs(den) < 1e-300) throw PreconditionError("circle image degenerates to a line");
  const double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  const Point o((a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / den,
                (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / den);
  return Disk{o, (w1 - o).norm()};
}

std::vector<Point> circle_points(const Point& c, double r, double h) {
  const int n = std::max(64, static_cast<int>(std::ceil(2 * std::numbers::pi * r / h)));
  std::vector<Point> pts;
  for (int k = 0; k < n; ++k) {
    const double t = 2 * std::numbers::pi * k / n;
    pts.emplace_back(c.x() + r * std::cos(t), c.y() + r * std::sin(t));
  }
  return pts;
}

std::vector<Point> rect_points(const Point& lo, const Point& hi) {
  return {lo, Point(hi.x(), lo.y()), hi, Point(lo.x(), hi.y())};
}

bool is_stretch(const Map& m) { return m.kind == MapKind::AffineStretch; }

std::vector<Shape> chain(const std::vector<Point>& pts) {
  std::vector<Shape> out;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) out.push_back(Segment{pts[k], pts[k + 1]});
  return out;
}

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_meet(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = cross(q2 - q1, p1 - q1), d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1), d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on = [](const Point& a, const Point& b, const Point& p, double d) {
    return d == 0 && std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
  };
  return on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4);
}

}  // namespace

Point pushforward(const Map& map, const Point& p) { return map(p); }

Polyline pushforward(const Map& map, const Polyline& curve, double h) {
  if (!(h > 0)) throw PreconditionError("h must be positive");
  Polyline out;
  if (curve.vertices.empty()) return out;
  out.vertices.push_back(map(curve.vertices.front()));
  for (std::size_t k = 0; k + 1 < curve.vertices.size(); ++k) {
    const Point& p = curve.vertices[k];
    const Point& q = curve.vertices[k + 1];
    refine_edge(map, p, q, out.vertices.back(), map(q), h, 0, out.vertices);
  }
  return out;
}

std::vector<Point> pushforward_closed(const Map& map, const std::vector<Point>& vertices, double h) {
  if (vertices.size() < 3) throw PreconditionError("closed polygon needs at least 3 vertices");
  std::vector<Point> closed = vertices;
  closed.push_back(vertices.front());
  Polyline img = pushforward(map, Polyline{closed}, h);
  img.vertices.pop_back();
  return img.vertices;
}

std::vector<Shape> pushforward(const Map& map, const Shape& shape, double h) {
  return std::visit(
      [&](const auto& s) -> std::vector<Shape> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Segment>) {
          return chain(pushforward(map, Polyline{{s.a, s.b}}, h).vertices);
        } else if constexpr (std::is_same_v<T, Arc>) {
          const double span = s.theta1 - s.theta0;
          const int n = std::max(8, static_cast<int>(std::ceil(s.radius * std::abs(span) / h)));
          std::vector<Point> pts;
          for (int k = 0; k <= n; ++k) {
            const double t = s.theta0 + span * k / n;
            pts.emplace_back(s.center.x() + s.radius * std::cos(t), s.center.y() + s.radius * std::sin(t));
          }
          return chain(pushforward(map, Polyline{pts}, h).vertices);
        } else if constexpr (std::is_same_v<T, Disk>) {
          if (is_mobius(map)) return {mobius_disk(map, s.center, s.radius)};
          return {Polygon{pushforward_closed(map, circle_points(s.center, s.radius, h), h)}};
        } else if constexpr (std::is_same_v<T, Annulus>) {
          throw PreconditionError("annulus plates cannot be pushed forward");
        } else if constexpr (std::is_same_v<T, Rect>) {
          if (is_stretch(map)) return {Rect{map(s.lo), map(s.hi)}};
          return {Polygon{pushforward_closed(map, rect_points(s.lo, s.hi), h)}};
        } else {
          return {Polygon{pushforward_closed(map, s.vertices, h)}};
        }
      },
      shape);
}

PlateSpec pushforward(const Map& map, const PlateSpec& plate, double h) {
  if (plate.role == PlateRole::BoundaryPlate) return plate;
  PlateSpec out{plate.role, {}};
  for (const auto& s : plate.geometry) {
    auto img = pushforward(map, s, h);
    out.geometry.insert(out.geometry.end(), img.begin(), img.end());
  }
  return out;
}

std::vector<Point> domain_outline(const DomainSpec& domain, double h) {
  return std::visit(
      [&](const auto& d) -> std::vector<Point> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DiskDomain>) {
          return circle_points(d.center, d.radius, h);
        } else if constexpr (std::is_same_v<T, RectDomain>) {
          return rect_points(d.lo, d.hi);
        } else if constexpr (std::is_same_v<T, PolygonDomain>) {
          return d.vertices;
        } else if constexpr (std::is_same_v<T, SnowflakeDomain>) {
          return snowflake_vertices(d.iterations);
        } else {
          throw PreconditionError(kind_name(domain) + " domains have no polygon outline");
        }
      },
      domain);
}

DomainSpec pushforward(const Map& map, const DomainSpec& domain, double h) {
  if (const auto* disk = std::get_if<DiskDomain>(&domain); disk != nullptr && is_mobius(map)) {
    const Disk img = mobius_disk(map, disk->center, disk->radius);
    return DiskDomain{img.center, img.radius};
  }
  if (const auto* rect = std::get_if<RectDomain>(&domain); rect != nullptr && is_stretch(map))
    return RectDomain{map(rect->lo), map(rect->hi)};
  return PolygonDomain{pushforward_closed(map, domain_outline(domain, h), h)};
}

Condenser pushforward(const Map& map, const Condenser& c, double h) {
  return {pushforward(map, c.domain, h), pushforward(map, c.plate0, h), pushforward(map, c.plate1, h)};
}

Region pushforward(const Map& map, const Region& region) {
  if (const auto* disk = std::get_if<Disk>(&region)) {
    if (is_mobius(map)) return mobius_disk(map, disk->center, disk->radius);
    throw PreconditionError("disk regions push forward under mobius maps only");
  }
  const auto& rect = std::get<Rect>(region);
  const bool scaling = is_mobius(map) && std::abs(map.c) == 0.0 &&
                       std::abs((map.a / map.d).imag()) == 0.0 && (map.a / map.d).real() > 0;
  if (is_stretch(map) || scaling) return Rect{map(rect.lo), map(rect.hi)};
  throw PreconditionError("rectangular regions push forward under stretches and scalings only");
}

InvarianceReport invariance_check(const Map& map, const Condenser& condenser, double h, int refine,
                                  double conformal_tol) {
  InvarianceReport rep;
  const CapacityEstimate src = condenser_capacity(condenser, h, refine).first;
  const CapacityEstimate img = condenser_capacity(pushforward(map, condenser, h), h, refine).first;
  if (!(src.value > 0)) throw PreconditionError("source condenser has zero capacity");
  rep.source = src.value;
  rep.image = img.value;
  rep.ratio = img.value / src.value;
  rep.K = map.K();
  rep.delta = src.error_indicator / src.value + (img.value > 0 ? img.error_indicator / img.value : 0.0);
  const double d = map.conformal() ? std::max(rep.delta, conformal_tol) : rep.delta;
  rep.lower = (1 - d) / (rep.K * rep.K);
  rep.upper = rep.K * rep.K * (1 + d);
  rep.within = rep.ratio >= rep.lower && rep.ratio <= rep.upper;
  return rep;
}

QuasiIsometryReport quasi_isometry_check(const Map& map,
                                         const std::vector<std::pair<Point, Point>>& pairs,
                                         const CapMetric& source, const CapMetric& image, int jobs) {
  std::vector<std::array<double, 2>> vals(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), jobs, [&](int k) {
    const auto& [x, y] = pairs[static_cast<std::size_t>(k)];
    vals[static_cast<std::size_t>(k)] = {source.rho(x, y).value, image.rho(map(x), map(y)).value};
  });
  QuasiIsometryReport rep;
  for (const auto& [s, i] : vals) {
    if (s <= source.noise_floor() || i <= image.noise_floor()) {
      ++rep.below_floor;
      continue;
    }
    rep.ratios.push_back(i / s);
    rep.constant = std::max({rep.constant, i / s, s / i});
    ++rep.used;
  }
  return rep;
}

void check_simple(const std::vector<Point>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) throw PreconditionError("closed polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_meet(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
        throw SelfIntersecting("edges " + std::to_string(i) + " and " + std::to_string(j) + " meet");
    }
}

CurveQualityReport ahlfors_constant(const std::vector<Point>& polygon, int samples) {
  check_simple(polygon);
  if (samples < 0) throw PreconditionError("samples must be >= 0");
  const std::size_t nv = polygon.size();
  double perimeter = 0.0;
  for (std::size_t k = 0; k < nv; ++k) perimeter += (polygon[(k + 1) % nv] - polygon[k]).norm();
  // Vertices plus arclength samples, in boundary order.
  std::vector<Point> P;
  const double step = samples > 0 ? perimeter / samples : perimeter + 1;
  double next = 0.0, walked = 0.0;
  for (std::size_t k = 0; k < nv; ++k) {
    const Point& a = polygon[k];
    const Point& b = polygon[(k + 1) % nv];
    const double len = (b - a).norm();
    P.push_back(a);
    while (next < walked + len) {
      const double t = (next - walked) / len;
      if (t > 1e-12 && t < 1 - 1e-12) P.push_back(a + t * (b - a));
      next += step;
    }
    walked += len;
  }
  const int N = static_cast<int>(P.size());
  if (N > 3000) throw TooLarge(std::to_string(N) + " curve points exceed the Ahlfors cap of 3000");
  Eigen::MatrixXd D(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) D(i, j) = (P[static_cast<std::size_t>(i)] - P[static_cast<std::size_t>(j)]).norm();
  // diam(len, i): diameter of the cyclic run i, i+1, ..., i+len.
  Eigen::MatrixXd diam = Eigen::MatrixXd::Zero(N, N);
  for (int len = 1; len < N; ++len)
    for (int i = 0; i < N; ++i)
      diam(len, i) = std::max({diam(len - 1, i), diam(len - 1, (i + 1) % N), D(i, (i + len) % N)});
  CurveQualityReport rep;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const double chord = D(i, j);
      if (chord <= 0) continue;
      const double d1 = diam(j - i, i), d2 = diam(N - (j - i), j);
      const double smaller = d1 < d2 ? d1 : (d2 < d1 ? d2 : (j - i <= N - (j - i) ? d1 : d2));
      const double r = smaller / chord;
      if (r > rep.ahlfors_constant) {
        rep.ahlfors_constant = r;
        rep.a = P[static_cast<std::size_t>(i)];
        rep.b = P[static_cast<std::size_t>(j)];
      }
    }
  return rep;
}

std::vector<Point> cusp_polygon(int refinement) {
  if (refinement < 0) throw PreconditionError("refinement must be >= 0");
  const double theta = 0.5 * std::pow(2.0, -refinement);
  const double depth = 0.5;
  const double w = depth * std::tan(theta / 2);
  return {Point(0, 0), Point(1, 0), Point(1, 1), Point(0.5 + w, 1), Point(0.5, 1 - depth),
          Point(0.5 - w, 1), Point(0, 1)};
}

Map parse_map(const std::string& spec_in) {
  std::string spec = spec_in;
  bool inv = false;
  if (spec.rfind("inverse:", 0) == 0) {
    inv = true;
    spec = spec.substr(8);
  }
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ValidationError("map argument '" + tok + "' is not a number");
      }
    }
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw ValidationError("map '" + kind + "' takes " + std::to_string(n) + " arguments");
  };
  Map m;
  if (kind == "identity") {
    need(0);
  } else if (kind == "mobius") {
    need(8);
    m = Map::mobius({args[0], args[1]}, {args[2], args[3]}, {args[4], args[5]}, {args[6], args[7]});
  } else if (kind == "disk_automorphism") {
    need(2);
    m = Map::disk_automorphism({args[0], args[1]});
  } else if (kind == "power") {
    need(1);
    m = Map::power(args[0]);
  } else if (kind == "affine_stretch") {
    need(1);
    m = Map::affine_stretch(args[0]);
  } else if (kind == "joukowski") {
    need(0);
    m = Map::joukowski();
  } else {
    throw ValidationError("unknown map kind '" + kind + "'");
  }
  return inv ? m.inverse() : m;
}

}  // namespace capbound
