#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "capbound/capacity.hpp"
#include "capbound/capmetric.hpp"
#include "capbound/errors.hpp"
#include "capbound/geometry.hpp"

namespace capbound {

enum class MapKind { Mobius, Power, AffineStretch, Joukowski };

/// Explicit conformal or affine quasiconformal map of the plane.
///  - mobius: (a z + b) / (c z + d), ad - bc != 0, source C minus the pole
///  - power: z^alpha (principal branch), source |arg z| < min(pi, pi / alpha)
///  - affine_stretch: x + iy -> lambda x + iy, lambda >= 1, K = lambda
///  - joukowski: z + 1/z, source |z| > 1
/// `inverted` turns any of them into its inverse on the image.
template <typename Scalar>
struct AnalyticMap {
  using C = std::complex<Scalar>;

  MapKind kind = MapKind::Mobius;
  C a{1}, b{0}, c{0}, d{1};
  Scalar alpha{1};
  Scalar lambda{1};
  bool inverted = false;

  static AnalyticMap identity() { return {}; }
  static AnalyticMap mobius(C a, C b, C c, C d) {
    if (std::abs(a * d - b * c) == Scalar(0)) throw PreconditionError("mobius map with ad - bc = 0");
    AnalyticMap m;
    m.a = a, m.b = b, m.c = c, m.d = d;
    return m;
  }
  /// z -> (z - a) / (1 - conj(a) z), |a| < 1.
  static AnalyticMap disk_automorphism(C a) {
    if (!(std::abs(a) < Scalar(1))) throw PreconditionError("disk automorphism needs |a| < 1");
    return mobius(C(1), -a, -std::conj(a), C(1));
  }
  static AnalyticMap power(Scalar alpha) {
    if (!(alpha > Scalar(0))) throw PreconditionError("power exponent must be positive");
    AnalyticMap m;
    m.kind = MapKind::Power;
    m.alpha = alpha;
    return m;
  }
  static AnalyticMap affine_stretch(Scalar lambda) {
    if (!(lambda >= Scalar(1))) throw PreconditionError("affine stretch needs lambda >= 1");
    AnalyticMap m;
    m.kind = MapKind::AffineStretch;
    m.lambda = lambda;
    return m;
  }
  static AnalyticMap joukowski() {
    AnalyticMap m;
    m.kind = MapKind::Joukowski;
    return m;
  }

  /// Quasiconformality constant; exactly 1 for the conformal kinds.
  Scalar K() const { return kind == MapKind::AffineStretch ? lambda : Scalar(1); }
  bool conformal() const { return kind != MapKind::AffineStretch; }

  AnalyticMap inverse() const {
    AnalyticMap m = *this;
    if (kind == MapKind::Mobius) {
      m.a = d, m.b = -b, m.c = -c, m.d = a;
    } else {
      m.inverted = !inverted;
    }
    return m;
  }

  bool in_source(const C& z) const {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    switch (kind) {
      case MapKind::Mobius: return std::abs(c * z + d) > Scalar(0);
      case MapKind::Power: {
        if (std::abs(z) == Scalar(0)) return false;
        const Scalar limit = inverted ? std::min(pi, pi * alpha) : std::min(pi, pi / alpha);
        return std::abs(std::arg(z)) < limit;
      }
      case MapKind::AffineStretch: return true;
      case MapKind::Joukowski:
        if (!inverted) return std::abs(z) > Scalar(1);
        // The image of |z| > 1 is the plane minus the segment [-2, 2].
        return !(z.imag() == Scalar(0) && std::abs(z.real()) <= Scalar(2));
    }
    return false;
  }

  C operator()(const C& z) const {
    if (!in_source(z))
      throw OutsideSource("point (" + std::to_string(double(z.real())) + ", " +
                          std::to_string(double(z.imag())) + ") outside the source of " + name());
    switch (kind) {
      case MapKind::Mobius: return (a * z + b) / (c * z + d);
      case MapKind::Power: return std::pow(z, inverted ? Scalar(1) / alpha : alpha);
      case MapKind::AffineStretch:
        return inverted ? C(z.real() / lambda, z.imag()) : C(lambda * z.real(), z.imag());
      case MapKind::Joukowski: {
        if (!inverted) return z + Scalar(1) / z;
        const C s = std::sqrt(z - Scalar(2)) * std::sqrt(z + Scalar(2));
        const C w = (z + s) / Scalar(2);
        return std::abs(w) >= Scalar(1) ? w : (z - s) / Scalar(2);
      }
    }
    return z;
  }

  Point2<Scalar> operator()(const Point2<Scalar>& p) const {
    const C w = (*this)(C(p.x(), p.y()));
    return {w.real(), w.imag()};
  }

  std::string name() const {
    std::string base;
    switch (kind) {
      case MapKind::Mobius: base = "mobius"; break;
      case MapKind::Power: base = "power(" + std::to_string(double(alpha)) + ")"; break;
      case MapKind::AffineStretch: base = "affine_stretch(" + std::to_string(double(lambda)) + ")"; break;
      case MapKind::Joukowski: base = "joukowski"; break;
    }
    return inverted ? "inverse " + base : base;
  }
};

using Map = AnalyticMap<double>;

/// Maps applied left to right; the distortion bound is the product of the
/// members' constants.
template <typename Scalar>
struct ComposedMap {
  std::vector<AnalyticMap<Scalar>> maps;

  Scalar K() const {
    Scalar k{1};
    for (const auto& m : maps) k *= m.K();
    return k;
  }
  std::complex<Scalar> operator()(std::complex<Scalar> z) const {
    for (const auto& m : maps) z = m(z);
    return z;
  }
  Point2<Scalar> operator()(const Point2<Scalar>& p) const {
    const auto w = (*this)(std::complex<Scalar>(p.x(), p.y()));
    return {w.real(), w.imag()};
  }
  ComposedMap inverse() const {
    ComposedMap out;
    for (auto it = maps.rbegin(); it != maps.rend(); ++it) out.maps.push_back(it->inverse());
    return out;
  }
};

/// Ratio of singular values of the central-difference Jacobian at p.
template <typename F>
double local_distortion(const F& f, const Point& p, double step = 1e-5) {
  const Point fx = (f(Point(p + Point(step, 0))) - f(Point(p - Point(step, 0)))) / (2 * step);
  const Point fy = (f(Point(p + Point(0, step))) - f(Point(p - Point(0, step)))) / (2 * step);
  Eigen::Matrix2d J;
  J.col(0) = fx;
  J.col(1) = fy;
  const Eigen::Vector2d s = J.jacobiSvd().singularValues();
  return s[1] > 0 ? s[0] / s[1] : std::numeric_limits<double>::infinity();
}

/// Max local distortion over the sample points.
template <typename F>
double empirical_distortion(const F& f, const std::vector<Point>& points, double step = 1e-5) {
  double k = 1.0;
  for (const auto& p : points) k = std::max(k, local_distortion(f, p, step));
  return k;
}

// Pushforwards. Curves are refined until every image edge stays within h of
// the image of its parameter midpoint.
Point pushforward(const Map& map, const Point& p);
Polyline pushforward(const Map& map, const Polyline& curve, double h);
/// Closed polygon (vertex list, implicit closing edge).
std::vector<Point> pushforward_closed(const Map& map, const std::vector<Point>& vertices, double h);
/// Disks stay disks under Mobius maps; other shapes become polygons or
/// segment chains. Annuli are rejected.
std::vector<Shape> pushforward(const Map& map, const Shape& shape, double h);
PlateSpec pushforward(const Map& map, const PlateSpec& plate, double h);
/// Disk domains stay disks under Mobius maps; disk, rectangle, polygon and
/// snowflake domains otherwise become polygon domains. Slit domains are
/// rejected.
DomainSpec pushforward(const Map& map, const DomainSpec& domain, double h);
Condenser pushforward(const Map& map, const Condenser& c, double h);
/// Disk regions under Mobius maps and rectangles under stretches only.
Region pushforward(const Map& map, const Region& region);

/// Boundary outline of a domain as a closed polygon with vertex spacing <= h.
std::vector<Point> domain_outline(const DomainSpec& domain, double h);

struct InvarianceReport {
  double source = 0.0;
  double image = 0.0;
  double ratio = 1.0;   // image / source
  double K = 1.0;
  double delta = 0.0;   // relative extrapolation error bands, summed
  double lower = 1.0, upper = 1.0;  // K^-2 (1 - d), K^2 (1 + d) with d = max(delta, conformal_tol)
  bool within = true;
};

InvarianceReport invariance_check(const Map& map, const Condenser& condenser, double h, int refine,
                                  double conformal_tol = 0.05);

struct QuasiIsometryReport {
  double constant = 1.0;          // max over used pairs of max(r, 1/r)
  std::vector<double> ratios;     // rho_image / rho_source per used pair
  int used = 0;
  int below_floor = 0;
};

/// Compares rho upper bounds of each pair with those of its image pair.
/// Pairs whose source or image value is at or below the noise floor are
/// skipped.
QuasiIsometryReport quasi_isometry_check(const Map& map,
                                         const std::vector<std::pair<Point, Point>>& pairs,
                                         const CapMetric& source, const CapMetric& image,
                                         int jobs = 1);

struct CurveQualityReport {
  double ahlfors_constant = 1.0;
  Point a = Point::Zero(), b = Point::Zero();  // maximizing pair
};

/// Max over pairs of sampled points (the vertices plus `samples` arclength
/// samples) of diam(smaller arc) / |a - b|. The smaller arc is the one of
/// smaller diameter, ties going to the arc with fewer points.
CurveQualityReport ahlfors_constant(const std::vector<Point>& polygon, int samples);

/// Throws SelfIntersecting when two non-adjacent edges meet.
void check_simple(const std::vector<Point>& polygon);

/// Unit square with an inward wedge from the middle of its top side; the
/// wedge's opening angle is 0.5 * 2^-refinement.
std::vector<Point> cusp_polygon(int refinement);

/// Parses "identity", "mobius:ar,ai,br,bi,cr,ci,dr,di", "disk_automorphism:ar,ai",
/// "power:alpha", "affine_stretch:lambda", "joukowski", optionally prefixed
/// with "inverse:".
Map parse_map(const std::string& spec);

}  // namespace capbound
