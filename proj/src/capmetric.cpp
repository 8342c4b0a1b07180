#include "capbound/capmetric.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

#include "capbound/parallel.hpp"

namespace capbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

bool lex_less(const Point& a, const Point& b) {
  return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
}

bool shape_within(const Region& V, const Shape& s) {
  std::vector<Point> pts;
  double pad = 0.0;
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Segment>) {
          pts = {g.a, g.b};
        } else if constexpr (std::is_same_v<T, Arc>) {
          for (int k = 0; k <= 64; ++k) {
            double sweep = g.theta1 - g.theta0;
            if (sweep < 0) sweep += 2 * std::numbers::pi;
            const double t = g.theta0 + sweep * k / 64;
            pts.push_back(g.center + g.radius * Point(std::cos(t), std::sin(t)));
          }
        } else if constexpr (std::is_same_v<T, Disk>) {
          pts = {g.center};
          pad = g.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          pts = {g.center};
          pad = g.outer;
        } else if constexpr (std::is_same_v<T, Rect>) {
          pts = {g.lo, g.hi, {g.lo.x(), g.hi.y()}, {g.hi.x(), g.lo.y()}};
        } else {
          pts = g.vertices;
        }
      },
      s);
  return std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        for (const auto& p : pts) {
          if constexpr (std::is_same_v<T, Disk>) {
            if ((p - v.center).norm() + pad > v.radius) return false;
          } else {
            if (p.x() - pad < v.lo.x() || p.x() + pad > v.hi.x() || p.y() - pad < v.lo.y() ||
                p.y() + pad > v.hi.y())
              return false;
          }
        }
        return true;
      },
      V);
}

std::vector<Point> region_outline(const Region& V, int n) {
  std::vector<Point> pts;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        for (int k = 0; k < n; ++k) {
          const double t = static_cast<double>(k) / n;
          if constexpr (std::is_same_v<T, Disk>) {
            pts.push_back(v.center + v.radius * Point(std::cos(2 * std::numbers::pi * t),
                                                      std::sin(2 * std::numbers::pi * t)));
          } else {
            const Point d = v.hi - v.lo;
            const double s = 4 * t;
            if (s < 1) pts.push_back(v.lo + Point(s * d.x(), 0));
            else if (s < 2) pts.push_back(Point(v.hi.x(), v.lo.y() + (s - 1) * d.y()));
            else if (s < 3) pts.push_back(v.hi - Point((s - 2) * d.x(), 0));
            else pts.push_back(Point(v.lo.x(), v.hi.y() - (s - 3) * d.y()));
          }
        }
      },
      V);
  return pts;
}

bool valid_polyline(const Polyline& c) {
  for (std::size_t k = 1; k < c.vertices.size(); ++k)
    if (c.vertices[k] == c.vertices[k - 1]) return false;
  return true;
}

bool segment_in_interior(const Point& a, const Point& b, const GridMask& mask) {
  return curve_in_interior(Polyline{{a, b}}, mask);
}

// Split the longest segment until the polyline has n vertices.
Polyline subdivide(Polyline c, int n) {
  while (static_cast<int>(c.vertices.size()) < n) {
    std::size_t best = 1;
    double len = -1;
    for (std::size_t k = 1; k < c.vertices.size(); ++k) {
      const double l = (c.vertices[k] - c.vertices[k - 1]).norm();
      if (l > len) {
        len = l;
        best = k;
      }
    }
    c.vertices.insert(c.vertices.begin() + static_cast<long>(best),
                      0.5 * (c.vertices[best] + c.vertices[best - 1]));
  }
  return c;
}

}  // namespace

CapMetric::CapMetric(MetricConfig config) : config_(std::move(config)) {
  if (!(config_.h > 0)) throw PreconditionError("metric resolution must be positive");
  if (config_.budget.vertices < 2) throw PreconditionError("optimizer needs at least 2 vertices");
  if (config_.budget.iterations < 0) throw PreconditionError("optimizer iterations must be >= 0");
  if (config_.budget.coarse_factor < 1) throw PreconditionError("coarse factor must be >= 1");
  if (config_.budget.detours < 0 || config_.budget.detours > 3)
    throw PreconditionError("detour count must lie in [0, 3]");
  if (config_.F.role != PlateRole::InnerContinuum)
    throw PreconditionError("metric continuum F must be an inner continuum");
  for (const auto& s : config_.F.geometry)
    if (!shape_within(config_.V, s)) throw PreconditionError("F must lie inside V");
  for (const auto& p : region_outline(config_.V, 720))
    if (!domain_contains(config_.domain, p)) throw PreconditionError("closure of V must lie inside the domain");

  auto make_level = [&](double h) {
    auto lv = std::make_unique<Level>();
    lv->mask = build_mask(config_.domain, h);
    lv->F = rasterize_plate(config_.F, lv->mask);
    lv->boundary = lv->mask.cells_with(Cell::Boundary);
    for (int c : lv->F)
      if (!lv->mask.is_interior(c)) throw PreconditionError("F must lie inside the domain");
    return lv;
  };
  fine_ = make_level(config_.h);
  if (config_.budget.coarse_factor > 1) {
    try {
      coarse_ = make_level(config_.h * config_.budget.coarse_factor);
    } catch (const Error&) {
      coarse_.reset();
    }
  }
}

double CapMetric::noise_floor() const {
  return config_.noise_floor >= 0 ? config_.noise_floor : 10.0 * std::sqrt(config_.tol);
}

double CapMetric::cached_energy(const Level& level, bool boundary_term, const CellSet& cells) const {
  auto& cache = boundary_term ? level.cache_b : level.cache_F;
  {
    std::lock_guard<std::mutex> lock(level.mu);
    auto it = cache.find(cells);
    if (it != cache.end()) return it->second;
  }
  SolveOptions opt;
  opt.tol = config_.tol;
  opt.method = config_.method;
  const double e =
      cell_capacity(level.mask, boundary_term ? level.boundary : level.F, cells, opt).energy;
  std::lock_guard<std::mutex> lock(level.mu);
  cache.emplace(cells, e);
  return e;
}

std::optional<CurveObjective> CapMetric::evaluate_on(const Level& level, const Polyline& curve) const {
  if (curve.vertices.empty() || !valid_polyline(curve)) return std::nullopt;
  const CellSet cover = curve_cover(curve, level.mask);
  CellSet inside, outside;
  for (int c : cover) {
    if (!level.mask.is_interior(c)) return std::nullopt;
    (contains(config_.V, level.mask.center(c)) ? inside : outside).push_back(c);
  }
  outside = set_difference(outside, level.F);
  CurveObjective obj;
  if (!outside.empty()) obj.term_F = std::sqrt(cached_energy(level, false, outside));
  if (!inside.empty()) obj.term_boundary = std::sqrt(cached_energy(level, true, inside));
  obj.value = obj.term_F + obj.term_boundary;
  return obj;
}

std::optional<CurveObjective> CapMetric::evaluate(const Polyline& curve) const {
  return evaluate_on(*fine_, curve);
}

Polyline CapMetric::shortest_path(const Point& x, const Point& y) const {
  const GridMask& m = fine_->mask;
  const int s = m.locate(x), t = m.locate(y);
  if (!m.is_interior(s) || !m.is_interior(t))
    throw PreconditionError("query point is not an interior point of the mask");
  if (s == t) return Polyline{{x, y}};
  std::vector<double> dist(static_cast<std::size_t>(m.size()), kInf);
  std::vector<int> prev(static_cast<std::size_t>(m.size()), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(s)] = 0;
  pq.push({0.0, s});
  while (!pq.empty()) {
    auto [d, c] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(c)]) continue;
    if (c == t) break;
    const int i = m.col(c), j = m.row(c);
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0) continue;
        if (!m.in_range(i + di, j + dj)) continue;
        const int n = m.index(i + di, j + dj);
        if (!m.is_interior(n)) continue;
        if (di != 0 && dj != 0 &&
            (!m.is_interior(m.index(i + di, j)) || !m.is_interior(m.index(i, j + dj))))
          continue;
        const double nd = d + ((di != 0 && dj != 0) ? std::numbers::sqrt2 : 1.0);
        if (nd < dist[static_cast<std::size_t>(n)]) {
          dist[static_cast<std::size_t>(n)] = nd;
          prev[static_cast<std::size_t>(n)] = c;
          pq.push({nd, n});
        }
      }
  }
  if (prev[static_cast<std::size_t>(t)] < 0) throw UnreachablePair("no interior path joins the points");
  std::vector<Point> pts{y};
  for (int c = t; c >= 0; c = prev[static_cast<std::size_t>(c)]) pts.push_back(m.center(c));
  pts.push_back(x);
  std::reverse(pts.begin(), pts.end());

  // Greedy string pulling keeps the path inside the interior cells.
  std::vector<Point> taut{pts.front()};
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t j = i + 1;
    while (j + 1 < pts.size() && segment_in_interior(pts[i], pts[j + 1], m)) ++j;
    if (pts[j] != taut.back()) taut.push_back(pts[j]);
    i = j;
  }
  if (taut.size() < 2) taut.push_back(y);
  return Polyline{std::move(taut)};
}

double CapMetric::point_floor(const Point& x) const {
  const auto obj = evaluate_on(*fine_, Polyline{{x}});
  if (!obj) throw PreconditionError("query point is not an interior point of the mask");
  return obj->value;
}

double CapMetric::resolved(const Point& x, const Point& y, bool quick) const {
  if (x == y) return 0.0;
  const double v = quick ? rho_quick(x, y).value : rho(x, y).value;
  return std::max(0.0, v - std::max(point_floor(x), point_floor(y)));
}

DistanceEstimate CapMetric::rho_quick(const Point& x, const Point& y) const {
  DistanceEstimate out;
  if (x == y) {
    out.curve = Polyline{{x}};
    out.below_resolution = true;
    return out;
  }
  const bool flip = lex_less(y, x);
  const Point a = flip ? y : x;
  const Point b = flip ? x : y;
  const std::array<double, 5> key{a.x(), a.y(), b.x(), b.y(), 1.0};
  {
    std::lock_guard<std::mutex> lock(memo_mu_);
    if (auto it = memo_.find(key); it != memo_.end()) {
      out = it->second;
      if (flip) out.curve = out.curve.reversed();
      return out;
    }
  }
  const Polyline sp = shortest_path(a, b);
  const auto obj = evaluate_on(*fine_, sp);
  if (!obj) throw UnreachablePair("shortest path left the interior");
  out.value = obj->value;
  out.term_F = obj->term_F;
  out.term_boundary = obj->term_boundary;
  out.curve = sp;
  out.below_resolution = out.value < noise_floor();
  {
    std::lock_guard<std::mutex> lock(memo_mu_);
    memo_.emplace(key, out);
  }
  if (flip) out.curve = out.curve.reversed();
  return out;
}

DistanceEstimate CapMetric::rho(const Point& x, const Point& y,
                                const std::vector<Polyline>& extra_seeds) const {
  DistanceEstimate out;
  if (x == y) {
    out.curve = Polyline{{x}};
    out.below_resolution = true;
    return out;
  }
  // Search the unordered pair {a, b} so that rho(x,y) and rho(y,x) coincide.
  const bool flip = lex_less(y, x);
  const Point a = flip ? y : x;
  const Point b = flip ? x : y;
  const std::array<double, 5> key{a.x(), a.y(), b.x(), b.y(), 0.0};
  if (extra_seeds.empty()) {
    std::lock_guard<std::mutex> lock(memo_mu_);
    if (auto it = memo_.find(key); it != memo_.end()) {
      out = it->second;
      if (flip) out.curve = out.curve.reversed();
      return out;
    }
  }

  std::vector<Polyline> seeds;
  const Polyline sp = subdivide(shortest_path(a, b), config_.budget.vertices);
  seeds.push_back(sp);
  static constexpr double offsets[] = {0.33, 0.66, 0.9};
  for (int d = 0; d < config_.budget.detours; ++d) {
    for (int shrink = 0; shrink < 6; ++shrink) {
      const double t = offsets[d] * std::pow(0.7, shrink);
      Polyline c = sp;
      for (std::size_t k = 1; k + 1 < c.vertices.size(); ++k) {
        const int nb = nearest_boundary_cell(fine_->mask, c.vertices[k]);
        if (nb >= 0) c.vertices[k] += t * (fine_->mask.center(nb) - c.vertices[k]);
      }
      if (valid_polyline(c) && curve_in_interior(c, fine_->mask)) {
        seeds.push_back(std::move(c));
        break;
      }
    }
  }
  for (const auto& s : extra_seeds) {
    if (s.vertices.size() < 2) continue;
    if (s.vertices.front() == a && s.vertices.back() == b) seeds.push_back(s);
    else if (s.vertices.front() == b && s.vertices.back() == a) seeds.push_back(s.reversed());
    else throw PreconditionError("seed curve endpoints differ from the query points");
  }

  const Level* search = fine_.get();
  if (coarse_ && coarse_->mask.is_interior(coarse_->mask.locate(a)) &&
      coarse_->mask.is_interior(coarse_->mask.locate(b)))
    search = coarse_.get();

  Polyline best_curve;
  CurveObjective best;
  best.value = kInf;
  auto offer_fine = [&](const Polyline& c, const std::optional<CurveObjective>& known) {
    const auto obj = known ? known : evaluate_on(*fine_, c);
    if (obj && obj->value < best.value) {
      best = *obj;
      best_curve = c;
    }
  };

  Polyline current;
  double current_value = kInf;
  for (const auto& s : seeds) {
    const auto fobj = evaluate_on(*fine_, s);
    offer_fine(s, fobj);
    const auto sobj = search == fine_.get() ? fobj : evaluate_on(*search, s);
    if (sobj && sobj->value < current_value) {
      current_value = sobj->value;
      current = s;
    }
  }
  if (current.vertices.empty() && best_curve.vertices.empty())
    throw UnreachablePair("no admissible seed curve joins the points");
  if (current.vertices.empty()) {
    search = fine_.get();
    current = best_curve;
    current_value = best.value;
  }

  std::uint64_t rng_key = splitmix64(config_.seed);
  for (double v : {a.x(), a.y(), b.x(), b.y()}) rng_key = splitmix64(rng_key ^ bits(v));
  std::mt19937_64 rng(rng_key);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double hs = search->mask.h();
  double step = 4 * hs;
  const int inner = static_cast<int>(current.vertices.size()) - 2;
  for (int it = 0; it < config_.budget.iterations && inner > 0; ++it) {
    const double dx = normal(rng), dy = normal(rng);
    const std::size_t j = 1 + static_cast<std::size_t>(it % inner);
    Polyline cand = current;
    cand.vertices[j] += step * Point(dx, dy);
    const auto obj = evaluate_on(*search, cand);
    if (obj && obj->value < current_value) {
      current = std::move(cand);
      current_value = obj->value;
      step = std::min(step * 1.5, 0.5);
      offer_fine(current, search == fine_.get() ? obj : std::nullopt);
    } else {
      step = std::max(step * 0.9, 0.25 * hs);
    }
  }

  out.value = best.value;
  out.term_F = best.term_F;
  out.term_boundary = best.term_boundary;
  out.curve = best_curve;
  out.below_resolution = out.value < noise_floor();
  if (extra_seeds.empty()) {
    std::lock_guard<std::mutex> lock(memo_mu_);
    memo_.emplace(key, out);
  }
  if (flip) out.curve = out.curve.reversed();
  return out;
}

DistanceEstimate rho(const Point& x, const Point& y, const MetricConfig& config) {
  return CapMetric(config).rho(x, y);
}

TriangleReport triangle_check(const std::vector<std::array<Point, 3>>& triples,
                              const CapMetric& metric, double slack, int jobs) {
  TriangleReport rep;
  rep.values.resize(triples.size());
  parallel_for(static_cast<int>(triples.size()) * 3, jobs, [&](int k) {
    const auto& t = triples[static_cast<std::size_t>(k / 3)];
    const Point& x = t[0];
    const Point& y = t[1];
    const Point& z = t[2];
    double v = 0;
    switch (k % 3) {
      case 0: v = metric.rho(x, y).value; break;
      case 1: v = metric.rho(x, z).value; break;
      default: v = metric.rho(z, y).value; break;
    }
    rep.values[static_cast<std::size_t>(k / 3)][static_cast<std::size_t>(k % 3)] = v;
  });
  for (const auto& v : rep.values) {
    const double denom = v[1] + v[2];
    const double ratio = denom > 0 ? v[0] / denom : (v[0] > 0 ? kInf : 0.0);
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio > slack) ++rep.violations;
  }
  return rep;
}

EquivalenceReport equivalence_check(const CapMetric& m1, const CapMetric& m2,
                                    const std::vector<std::pair<Point, Point>>& pairs, int jobs) {
  std::vector<double> v1(pairs.size()), v2(pairs.size());
  parallel_for(static_cast<int>(pairs.size()) * 2, jobs, [&](int k) {
    const auto& p = pairs[static_cast<std::size_t>(k / 2)];
    if (k % 2 == 0) v1[static_cast<std::size_t>(k / 2)] = m1.rho(p.first, p.second).value;
    else v2[static_cast<std::size_t>(k / 2)] = m2.rho(p.first, p.second).value;
  });
  EquivalenceReport rep;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (v1[k] < m1.noise_floor() || v2[k] < m2.noise_floor()) {
      ++rep.below_floor;
      continue;
    }
    const double r = v1[k] / v2[k];
    rep.ratios.push_back(r);
    rep.K = std::max({rep.K, r, 1.0 / r});
    ++rep.used;
  }
  return rep;
}

TopologyReport topology_check(const Point& x0, const std::vector<double>& radii,
                              const CapMetric& metric, int samples_per_circle, int jobs) {
  const int n = std::max(1, samples_per_circle);
  std::vector<double> vals(radii.size() * static_cast<std::size_t>(n));
  parallel_for(static_cast<int>(vals.size()), jobs, [&](int k) {
    const double r = radii[static_cast<std::size_t>(k / n)];
    const double t = 2 * std::numbers::pi * (k % n) / n;
    vals[static_cast<std::size_t>(k)] = metric.rho(x0, x0 + r * Point(std::cos(t), std::sin(t))).value;
  });
  TopologyReport rep;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const auto first = vals.begin() + static_cast<long>(i) * n;
    const auto [lo, hi] = std::minmax_element(first, first + n);
    rep.rows.push_back({radii[i], *lo, *hi, *lo > 0});
  }
  std::vector<TopologyRow> sorted = rep.rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& p, const auto& q) { return p.radius > q.radius; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (!(sorted[i].min_rho < sorted[i - 1].min_rho)) rep.decreasing = false;
  return rep;
}

std::vector<AsymptoticMetricRow> asymptotic_ratio(const std::vector<double>& eps_list,
                                                  const CapMetric& metric, int jobs) {
  std::vector<AsymptoticMetricRow> rows(eps_list.size());
  parallel_for(static_cast<int>(eps_list.size()), jobs, [&](int k) {
    const double eps = eps_list[static_cast<std::size_t>(k)];
    const double v = metric.rho(Point::Zero(), Point(eps, 0.0)).value;
    rows[static_cast<std::size_t>(k)] = {eps, v, eps > 0 ? v / eps : 0.0};
  });
  return rows;
}

double ratio_spread(const std::vector<AsymptoticMetricRow>& rows) {
  double lo = kInf, hi = 0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  return rows.empty() ? 1.0 : hi / lo;
}

}  // namespace capbound
