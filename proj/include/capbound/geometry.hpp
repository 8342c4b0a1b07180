#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "capbound/errors.hpp"

namespace capbound {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;
using Point = Point2<double>;

/// Ordered vertex list. A single vertex is the degenerate curve returned for
/// coincident endpoints; everything else needs >= 2 distinct consecutive
/// vertices.
struct Polyline {
  std::vector<Point> vertices;

  double length() const;
  bool degenerate() const { return vertices.size() == 1; }
  Polyline reversed() const;
};

/// Throws PreconditionError unless the polyline satisfies its invariants.
Polyline make_polyline(std::vector<Point> vertices);

// Plate / region primitives.
struct Segment {
  Point a, b;
};
struct Arc {
  Point center;
  double radius;
  double theta0, theta1;  // counter-clockwise from theta0 to theta1
};
struct Disk {
  Point center;
  double radius;
};
struct Annulus {
  Point center;
  double inner, outer;
};
struct Rect {
  Point lo, hi;
};
struct Polygon {
  std::vector<Point> vertices;  // filled, simple, either orientation
};

using Shape = std::variant<Segment, Arc, Disk, Annulus, Rect, Polygon>;

enum class PlateRole { InnerContinuum, BoundaryPlate };

struct PlateSpec {
  PlateRole role = PlateRole::InnerContinuum;
  std::vector<Shape> geometry;

  static PlateSpec boundary() { return {PlateRole::BoundaryPlate, {}}; }
  static PlateSpec inner(std::vector<Shape> shapes) {
    return {PlateRole::InnerContinuum, std::move(shapes)};
  }
};

/// The auxiliary region V of a capacitary metric; closed disks and
/// axis-aligned rectangles only.
using Region = std::variant<Disk, Rect>;
bool contains(const Region& region, const Point& p);

// Domain kinds.
struct DiskDomain {
  Point center = Point::Zero();
  double radius = 1.0;
};
struct RectDomain {
  Point lo, hi;
};
struct SlitDiskDomain {
  double radius = 1.0;
  std::vector<Segment> slits;
};
/// (-2,2)x(0,1) minus the slits y = 3^-n (x in [-1,2]) and y = 2*3^-n
/// (x in [-2,1]) for n = 1..levels.
struct CombDomain {
  int levels = 1;
};
/// disk(0,2) minus radial slits from the origin: angle 0 with length 1, and
/// angles 2*pi*p/2^n (p odd, 0 < p < 2^n) with length 2^-n for n = 1..depth.
struct CantorFanDomain {
  int depth = 1;
};
struct PolygonDomain {
  std::vector<Point> vertices;
};
/// Koch snowflake with circumradius 1 centred at the origin.
struct SnowflakeDomain {
  int iterations = 0;
};

using DomainSpec = std::variant<DiskDomain, RectDomain, SlitDiskDomain, CombDomain,
                                CantorFanDomain, PolygonDomain, SnowflakeDomain>;

std::string kind_name(const DomainSpec& domain);

/// Closed Koch snowflake vertex list (3 * 4^iterations vertices, ccw).
std::vector<Point> snowflake_vertices(int iterations);

/// Constructive description used by rasterization and distance queries.
struct DomainGeometry {
  Point lo, hi;                           // bounding box
  std::function<bool(const Point&)> inside;  // open set, slits ignored
  std::vector<Segment> slits;             // zero-thickness removed segments
  std::vector<Segment> boundary_segments; // straight pieces of the boundary (incl. slits)
  std::vector<Disk> boundary_circles;     // circular pieces of the boundary
  double thinnest_feature;                // narrowest channel/slit/diameter
  double perimeter;                       // boundary length (slits counted twice)
};

DomainGeometry describe(const DomainSpec& domain);

/// True iff p lies in the open domain (off every slit).
bool domain_contains(const DomainSpec& domain, const Point& p);
double distance_to_boundary(const DomainSpec& domain, const Point& p);

/// Width of the level-k comb channel measured in cells of size h.
double comb_channel_cells(int level, double h);

enum class Cell : std::uint8_t { Exterior = 0, Interior = 1, Boundary = 2, Plate0 = 3, Plate1 = 4 };

/// Sorted local cell indices into one GridMask.
using CellSet = std::vector<int>;

/// Window onto the global lattice of cells of size h centred at (i*h, j*h).
/// Masks built at the same h share lattice coordinates.
class GridMask {
 public:
  GridMask() = default;
  GridMask(double h, int i0, int j0, int nx, int ny);

  double h() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }
  int i0() const { return i0_; }
  int j0() const { return j0_; }

  int index(int i, int j) const { return j * nx_ + i; }
  int col(int idx) const { return idx % nx_; }
  int row(int idx) const { return idx / nx_; }
  bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }

  Point center(int idx) const;
  /// Local index of the half-open cell containing p, or -1 outside the window.
  int locate(const Point& p) const;
  /// Local index of lattice cell (gi, gj), or -1 outside the window.
  int from_lattice(int gi, int gj) const;

  Cell label(int idx) const { return labels_[static_cast<std::size_t>(idx)]; }
  void set_label(int idx, Cell c) { labels_[static_cast<std::size_t>(idx)] = c; }
  const std::vector<Cell>& labels() const { return labels_; }

  CellSet cells_with(Cell c) const;
  int count(Cell c) const;
  bool is_interior(int idx) const { return idx >= 0 && label(idx) == Cell::Interior; }
  /// 4-neighbours inside the window.
  template <typename Fn>
  void for_each_neighbor4(int idx, Fn&& fn) const {
    const int i = col(idx), j = row(idx);
    if (i > 0) fn(idx - 1);
    if (i + 1 < nx_) fn(idx + 1);
    if (j > 0) fn(idx - nx_);
    if (j + 1 < ny_) fn(idx + nx_);
  }

  bool operator==(const GridMask& o) const {
    return h_ == o.h_ && i0_ == o.i0_ && j0_ == o.j0_ && nx_ == o.nx_ && ny_ == o.ny_ &&
           labels_ == o.labels_;
  }

 private:
  double h_ = 0.0;
  int i0_ = 0, j0_ = 0, nx_ = 0, ny_ = 0;
  std::vector<Cell> labels_;
};

/// Rasterize the domain at cell size h. Interior = cell centre inside the
/// open domain and the cell not crossed by a slit; boundary = non-interior
/// cells 4-adjacent to interior. Only the largest interior component is kept.
GridMask build_mask(const DomainSpec& domain, double h);

/// Cells whose closed square meets the plate geometry (inner continuum), or
/// every boundary cell (boundary plate).
CellSet rasterize_plate(const PlateSpec& plate, const GridMask& mask);

/// Cells meeting any of the shapes (closed squares), restricted to
/// non-exterior cells. Unlike rasterize_plate, empty results are allowed.
CellSet rasterize_shapes(const std::vector<Shape>& shapes, const GridMask& mask);

struct CurveCells {
  CellSet inside;   // covering cells with centre in V
  CellSet outside;  // the rest
  CellSet all() const;
};

/// Covering cells of the curve (half-open cells visited by exact traversal),
/// partitioned by membership of the cell centre in V. Throws
/// CurveEscapesDomain if a covering cell is not interior.
CurveCells rasterize_curve(const Polyline& curve, const GridMask& mask, const Region& V);

/// Covering cells without the interior check (may include any label).
CellSet curve_cover(const Polyline& curve, const GridMask& mask);
bool curve_in_interior(const Polyline& curve, const GridMask& mask);

// Cell-set helpers.
CellSet set_union(const CellSet& a, const CellSet& b);
CellSet set_intersection(const CellSet& a, const CellSet& b);
CellSet set_difference(const CellSet& a, const CellSet& b);
bool is_connected(const CellSet& cells, const GridMask& mask, bool eight = true);
/// Map cells of `from` onto `to`: identical lattice when h matches, else the
/// cells of `to` whose centres fall inside the squares of `from`.
CellSet transfer(const CellSet& cells, const GridMask& from, const GridMask& to);
/// Max distance between cell centres.
double diameter(const CellSet& cells, const GridMask& mask);

/// Euclidean distance from each cell centre to the nearest boundary cell
/// centre (exact squared-distance transform).
Eigen::VectorXd boundary_distance(const GridMask& mask);
/// Nearest boundary cell to p by ring search; -1 if none.
int nearest_boundary_cell(const GridMask& mask, const Point& p);

double interior_area(const GridMask& mask);

}  // namespace capbound
