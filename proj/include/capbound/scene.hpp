#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "capbound/boundary.hpp"
#include "capbound/capacity.hpp"
#include "capbound/capmetric.hpp"
#include "capbound/geometry.hpp"

namespace capbound {

struct ApproachMember {
  Point target, direction;
  double start;
  int depth;
  double rate;
};
struct RadialMember {
  Point center;
  double radius, theta;
  int depth;
  double rate;
};
struct CombChannelMember {
  double x;
  int levels;
};
struct FanSectorMember {
  int sector, depth;
};
using MemberSpec = std::variant<ApproachMember, RadialMember, CombChannelMember, FanSectorMember>;

BoundarySequence make_sequence(const MemberSpec& spec, double h);

struct ElementSpec {
  std::string label;
  std::vector<MemberSpec> members;
};

struct CombCollapseSpec {
  int levels = 3;
  double x1 = -0.5, x2 = 0.5;
};

struct BoundaryScene {
  double tol = 0.08;
  std::vector<double> eps{0.5, 0.2, 0.1, 0.05, 0.02};
  RealizationOptions realization;
  std::vector<ElementSpec> elements;
  std::optional<CombCollapseSpec> comb_collapse;
};

struct TraceScene {
  double h = 0.0;  // function resolution; 0 uses the scene h
  std::vector<double> eps{2.0, 1.0};
  Point z0 = Point(1, 0);
  bool strong = false;
};

struct MetricScene {
  PlateSpec F;
  Region V;
  OptimizerBudget budget;
  double tol = 1e-8;
};

/// Parsed and validated scene file.
struct Scene {
  std::string name;
  DomainSpec domain;
  std::optional<Condenser> condenser;
  std::optional<MetricScene> metric;
  double h = 0.02;
  int refine = 1;
  std::uint64_t seed = 1;
  std::vector<std::pair<Point, Point>> pairs;
  std::optional<BoundaryScene> boundary;
  std::optional<TraceScene> trace;
  std::string canonical;  // normalized JSON text, hashed into manifests

  MetricConfig metric_config() const;
};

/// Throws ValidationError naming the JSON path of the offending field.
Scene parse_scene(const std::string& text, const std::string& name);
Scene load_scene(const std::string& path);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& data);

}  // namespace capbound
