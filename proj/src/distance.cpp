#include "conic/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cyclic 1-d boundary coordinate system, if the geometry has one.
struct RingCoords {
  double period;
};

std::optional<RingCoords> ring_coords(const BoundaryGeometry& geom) {
  if (const auto* c = std::get_if<Circle>(&geom)) return RingCoords{c->circumference};
  if (const auto* t = std::get_if<FlatTorus>(&geom))
    if (t->periods.size() == 1) return RingCoords{t->periods[0]};
  return std::nullopt;
}

double wrap_diff(double d, double period) {
  d = std::fmod(d, period);
  if (d > 0.5 * period) d -= period;
  if (d < -0.5 * period) d += period;
  return d;
}

double chart_chord(const ConicMetricSpec& spec, const ChartPoint& a, const ChartPoint& b) {
  double dn = boundary_distance(spec.boundary, a.y, b.y);
  return std::abs(a.r - b.r) + std::max(a.r, b.r) * dn;
}

}  // namespace

std::vector<double> GridDiscretization::levels() const {
  std::vector<double> out(n_r);
  if (spacing == Spacing::Uniform) {
    double step = (r_max - r_min) / n_r;
    for (int j = 0; j < n_r; ++j) out[j] = r_min + (j + 1) * step;
  } else {
    double lo = r_min > 0.0 ? r_min : r_max / std::pow(1.0 / 0.9, n_r - 1);
    double ratio = std::pow(r_max / lo, 1.0 / (n_r - 1));
    for (int j = 0; j < n_r; ++j) out[j] = lo * std::pow(ratio, j);
    out.back() = r_max;
  }
  return out;
}

void GridDiscretization::validate(const MetricSpec& spec) const {
  if (n_r < 2 || n_y < 3) throw std::invalid_argument("grid needs n_r >= 2 and n_y >= 3");
  if (!(r_max > r_min) || r_min < 0.0) throw std::invalid_argument("grid radial range invalid");
  const ConicMetricSpec& base = base_spec(spec);
  if (std::isfinite(base.eta) && r_max > base.eta)
    throw std::invalid_argument("grid exceeds the cylinder height");
  if (is_ac(spec)) {
    if (include_apex) throw std::invalid_argument("apex node is invalid for an ac chart");
    if (!(r_min > 0.0)) throw std::invalid_argument("ac grid needs radial levels bounded away from 0");
  }
}

int ChartGraph::node_index(int iy, int jr) const {
  return jr * static_cast<int>(samples.size()) + iy;
}

int ChartGraph::nearest_node(const ChartPoint& p) const {
  const ConicMetricSpec& base = base_spec(spec);
  int best = -1;
  double best_d = kInf;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    if (i == apex && p.r > 0.0) {
      double d = p.r;
      if (d < best_d) { best_d = d; best = i; }
      continue;
    }
    double d = chart_chord(base, p, nodes[i]);
    if (d < best_d) { best_d = d; best = i; }
  }
  return best;
}

ChartGraph build_graph(const MetricSpec& spec, const GridDiscretization& grid) {
  grid.validate(spec);
  const ConicMetricSpec& base = base_spec(spec);

  ChartGraph g;
  g.spec = spec;
  g.grid = grid;
  g.radial_levels = grid.levels();

  std::vector<std::pair<int, int>> sample_edges;  // boundary neighbor pairs
  if (auto ring = ring_coords(base.boundary)) {
    g.ring = true;
    for (int i = 0; i < grid.n_y; ++i) {
      double s = ring->period * i / grid.n_y;
      BoundaryPoint p;
      p.coords = Eigen::VectorXd::Constant(1, s);
      g.samples.push_back(p);
      sample_edges.push_back({i, (i + 1) % grid.n_y});
    }
  } else if (const auto* mesh = std::get_if<MeshGraph>(&base.boundary)) {
    for (int v = 0; v < static_cast<int>(mesh->vertices.size()); ++v)
      g.samples.push_back(make_mesh_vertex(*mesh, v));
    for (const auto& e : mesh->edges) sample_edges.push_back({e[0], e[1]});
  } else {
    throw std::invalid_argument("graph discretization supports 1-d smooth boundaries and meshes");
  }

  const int ny = static_cast<int>(g.samples.size());
  const int nr = static_cast<int>(g.radial_levels.size());
  for (int j = 0; j < nr; ++j)
    for (int i = 0; i < ny; ++i)
      g.nodes.push_back({g.samples[i], g.radial_levels[j]});
  if (grid.include_apex) {
    g.apex = static_cast<int>(g.nodes.size());
    g.nodes.push_back({g.samples[0], 0.0});
  }
  g.adjacency.assign(g.nodes.size(), {});

  auto link = [&](int a, int b, double w) {
    g.adjacency[a].push_back({b, w});
    g.adjacency[b].push_back({a, w});
  };

  // radial edges
  for (int j = 0; j + 1 < nr; ++j)
    for (int i = 0; i < ny; ++i)
      link(g.node_index(i, j), g.node_index(i, j + 1),
           segment_length(spec, g.nodes[g.node_index(i, j)], g.nodes[g.node_index(i, j + 1)]));
  // level and diagonal edges
  for (const auto& [a, b] : sample_edges) {
    for (int j = 0; j < nr; ++j)
      link(g.node_index(a, j), g.node_index(b, j),
           segment_length(spec, g.nodes[g.node_index(a, j)], g.nodes[g.node_index(b, j)]));
    for (int j = 0; j + 1 < nr; ++j) {
      link(g.node_index(a, j), g.node_index(b, j + 1),
           segment_length(spec, g.nodes[g.node_index(a, j)], g.nodes[g.node_index(b, j + 1)]));
      link(g.node_index(b, j), g.node_index(a, j + 1),
           segment_length(spec, g.nodes[g.node_index(b, j)], g.nodes[g.node_index(a, j + 1)]));
    }
  }
  if (g.apex >= 0)
    for (int i = 0; i < ny; ++i) link(g.apex, g.node_index(i, 0), g.radial_levels[0]);
  return g;
}

std::vector<double> graph_all_distances(const ChartGraph& graph, int source,
                                        std::vector<int>* parent) {
  std::vector<double> dist(graph.nodes.size(), kInf);
  if (parent) parent->assign(graph.nodes.size(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (auto [w, len] : graph.adjacency[v]) {
      double nd = d + len;
      if (nd < dist[w]) {
        dist[w] = nd;
        if (parent) (*parent)[w] = v;
        heap.push({nd, w});
      }
    }
  }
  return dist;
}

DistanceResult graph_distance(const ChartGraph& graph, const ChartPoint& x,
                              const ChartPoint& x2) {
  const ConicMetricSpec& base = base_spec(graph.spec);
  int a = graph.nearest_node(x);
  int b = graph.nearest_node(x2);
  DistanceResult res;
  res.method = DistanceResult::Method::Graph;
  double snap = (a == graph.apex ? x.r : chart_chord(base, x, graph.nodes[a])) +
                (b == graph.apex ? x2.r : chart_chord(base, x2, graph.nodes[b]));
  res.residual = snap;
  if (a == b) {
    res.value = 0.0;
    res.path.points = {graph.nodes[a], graph.nodes[b]};
    return res;
  }
  std::vector<int> parent;
  auto dist = graph_all_distances(graph, a, &parent);
  res.value = dist[b];
  if (!std::isfinite(res.value)) return res;  // different components
  std::vector<int> chain;
  for (int v = b; v != -1; v = parent[v]) chain.push_back(v);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    res.path.points.push_back(graph.nodes[*it]);
  return res;
}

double exact_simple_cone_distance(const ConicMetricSpec& spec, const ChartPoint& x,
                                  const ChartPoint& x2) {
  if (!std::holds_alternative<ConstantFamily>(spec.family))
    throw std::invalid_argument("exact cone distance requires a constant family");
  double angle = std::min(spec.boundary_distance0(x.y, x2.y), M_PI);
  double d2 = x.r * x.r + x2.r * x2.r - 2.0 * x.r * x2.r * std::cos(angle);
  return std::sqrt(std::max(0.0, d2));
}

std::pair<double, double> conic_sandwich_bounds(const ChartPoint& x, const ChartPoint& x2,
                                                double d_N) {
  double dr = std::abs(x.r - x2.r);
  double m = std::min(x.r, x2.r);
  return {0.5 * dr + 0.5 * m * d_N, dr + m * d_N};
}

double ac_e_function(const ChartPoint& x, const ChartPoint& x2, double d_N) {
  if (x.r <= 0.0 || x2.r <= 0.0)
    throw std::domain_error("e-function is singular at r = 0");
  double R = 1.0 / x.r, R2 = 1.0 / x2.r;
  return std::abs(R - R2) + std::min(R, R2) * d_N;
}

DistanceResult refine_geodesic(const MetricSpec& spec, const CurvePolyline& seed,
                               const RefineOptions& opts) {
  seed.validate();
  const ConicMetricSpec& base = base_spec(spec);
  auto ring = ring_coords(base.boundary);
  DistanceResult res;
  if (!ring || seed.points.size() < 3) {
    res.value = curve_length(spec, seed);
    res.path = seed;
    res.method = DistanceResult::Method::Graph;
    return res;
  }

  const double period = ring->period;
  const int n = static_cast<int>(seed.points.size());
  std::vector<double> u(n), r(n);
  u[0] = seed.points[0].y.coords[0];
  r[0] = seed.points[0].r;
  for (int i = 1; i < n; ++i) {
    u[i] = u[i - 1] + wrap_diff(seed.points[i].y.coords[0] - seed.points[i - 1].y.coords[0], period);
    r[i] = seed.points[i].r;
  }

  const bool ac = is_ac(spec);
  const double r_lo = ac ? 1e-9 : 0.0;
  const double r_hi = std::isfinite(base.eta) ? base.eta : kInf;
  // tight enough that vertex moves with quadratically small gains still beat
  // the quadrature noise, else descent stalls short of the minimizer
  QuadratureOptions fast{1e-10, 12};

  auto seg_uv = [&](double ua, double ra, double ub, double rb) {
    return segment_length_scalar(spec, std::abs(ua - ub), ra, rb, fast);
  };
  auto chain_total = [&](const std::vector<double>& cu, const std::vector<double>& cr) {
    double s = 0.0;
    for (size_t i = 0; i + 1 < cu.size(); ++i) s += seg_uv(cu[i], cr[i], cu[i + 1], cr[i + 1]);
    return s;
  };

  int projections = 0;
  double last_rel = kInf;
  auto descend = [&](std::vector<double>& cu, std::vector<double>& cr) {
    const int m = static_cast<int>(cu.size());
    double length = chain_total(cu, cr);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
      double before = length;
      for (int i = 1; i + 1 < m; ++i) {
        double local = seg_uv(cu[i - 1], cr[i - 1], cu[i], cr[i]) +
                       seg_uv(cu[i], cr[i], cu[i + 1], cr[i + 1]);
        double hu = std::max({std::abs(cu[i + 1] - cu[i - 1]), 1e-3}) * 0.5;
        double hr = std::max({std::abs(cr[i + 1] - cr[i - 1]), 1e-3}) * 0.5;
        for (int shrink = 0; shrink < 14; ++shrink) {
          bool moved = false;
          static const int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1},  {0, -1},
                                         {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
          for (const auto& d : dirs) {
            double u0 = cu[i], r0 = cr[i];
            cu[i] = u0 + d[0] * hu;
            double rc = r0 + d[1] * hr;
            double rp = std::clamp(rc, r_lo, r_hi);
            if (rp != rc) ++projections;
            cr[i] = rp;
            double cand = seg_uv(cu[i - 1], cr[i - 1], cu[i], cr[i]) +
                          seg_uv(cu[i], cr[i], cu[i + 1], cr[i + 1]);
            if (cand < local - 1e-15) {
              local = cand;
              moved = true;
              break;
            }
            cu[i] = u0;
            cr[i] = r0;
          }
          if (!moved) {
            hu *= 0.5;
            hr *= 0.5;
          }
        }
      }
      length = chain_total(cu, cr);
      last_rel = (before - length) / std::max(before, 1e-300);
      if (last_rel < opts.tol) break;
    }
  };

  // coarse-to-fine: vertex-wise descent only removes short-wavelength error,
  // so start from a downsampled chain and subdivide between rounds
  std::vector<double> cu, cr;
  int coarse = std::min(n, 17);
  for (int i = 0; i < coarse; ++i) {
    int idx = (i * (n - 1)) / (coarse - 1);
    cu.push_back(u[idx]);
    cr.push_back(r[idx]);
  }
  descend(cu, cr);
  while (static_cast<int>(cu.size()) < 65) {
    std::vector<double> nu, nr;
    for (size_t i = 0; i + 1 < cu.size(); ++i) {
      nu.push_back(cu[i]);
      nr.push_back(cr[i]);
      nu.push_back(0.5 * (cu[i] + cu[i + 1]));
      nr.push_back(0.5 * (cr[i] + cr[i + 1]));
    }
    nu.push_back(cu.back());
    nr.push_back(cr.back());
    cu = std::move(nu);
    cr = std::move(nr);
    descend(cu, cr);
  }

  res.path.points.resize(cu.size());
  for (size_t i = 0; i < cu.size(); ++i) {
    BoundaryPoint y;
    double s = std::fmod(cu[i], period);
    if (s < 0.0) s += period;
    y.coords = Eigen::VectorXd::Constant(1, s);
    res.path.points[i] = {y, cr[i]};
  }
  // endpoints stay pinned bit-exactly
  res.path.points.front() = seed.points.front();
  res.path.points.back() = seed.points.back();
  res.value = curve_length(spec, res.path);
  double seed_value = curve_length(spec, seed);
  if (res.value > seed_value) {  // keep the no-worse-than-seed guarantee
    res.value = seed_value;
    res.path = seed;
  }
  res.method = DistanceResult::Method::Refined;
  res.residual = std::isfinite(last_rel) ? last_rel : 0.0;
  res.domain_projections = projections;
  return res;
}

namespace {

// Geodesic polyline of the developed cone between x and x' (angle < pi).
CurvePolyline developed_cone_path(const ConicMetricSpec& spec, const ChartPoint& x,
                                  const ChartPoint& x2, double angle, int points,
                                  bool invert_radius) {
  CurvePolyline path;
  Eigen::Vector2d A(x.r, 0.0);
  Eigen::Vector2d B(x2.r * std::cos(angle), x2.r * std::sin(angle));
  if (invert_radius) {
    A.x() = 1.0 / x.r;
    B = Eigen::Vector2d(std::cos(angle) / x2.r, std::sin(angle) / x2.r);
  }
  for (int k = 0; k < points; ++k) {
    double t = static_cast<double>(k) / (points - 1);
    Eigen::Vector2d P = A + t * (B - A);
    double rho = P.norm();
    double beta = std::atan2(P.y(), P.x());
    double frac = angle > 1e-14 ? std::clamp(beta / angle, 0.0, 1.0) : t;
    BoundaryPoint y = boundary_interpolate(spec.boundary, x.y, x2.y, frac);
    double r = invert_radius ? 1.0 / rho : rho;
    path.points.push_back({y, r});
  }
  path.points.front() = x;
  path.points.back() = x2;
  return path;
}

DistanceResult dispatch_distance(const MetricSpec& spec, const ChartPoint& x,
                                 const ChartPoint& x2, const DistanceOptions& opts) {
  const ConicMetricSpec& base = base_spec(spec);
  const bool ac = is_ac(spec);
  if (x.r < 0.0 || x2.r < 0.0) throw std::domain_error("point outside the chart domain");
  if (ac && (x.r == 0.0 || x2.r == 0.0))
    throw std::domain_error("asymptotically conic distance is undefined at r = 0");
  if (std::isfinite(base.eta) && (x.r >= base.eta || x2.r >= base.eta))
    throw std::domain_error("point outside the chart domain");

  bool exact_ok = std::holds_alternative<ConstantFamily>(base.family) && !opts.force_graph;
  if (exact_ok) {
    DistanceResult res;
    res.method = DistanceResult::Method::Exact;
    double angle = std::min(base.boundary_distance0(x.y, x2.y), M_PI);
    if (ac) {
      double R = 1.0 / x.r, R2 = 1.0 / x2.r;
      res.value = std::sqrt(std::max(0.0, R * R + R2 * R2 - 2.0 * R * R2 * std::cos(angle)));
    } else {
      res.value = exact_simple_cone_distance(base, x, x2);
    }
    if (angle < M_PI - 1e-12) {
      res.path = developed_cone_path(base, x, x2, angle, opts.exact_path_points, ac);
    } else if (!ac) {
      // minimizer passes through the apex
      res.path.points = {x, {x.y, 0.0}, {x2.y, 0.0}, x2};
    } else {
      res.path.points = {x, x2};  // degenerate: report endpoints only
    }
    return res;
  }

  const ChartGraph* graph = opts.graph;
  ChartGraph local;
  if (!graph) {
    GridDiscretization grid = opts.grid;
    if (ac) {
      grid.include_apex = false;
      if (!(grid.r_min > 0.0)) grid.r_min = 0.5 * std::min(x.r, x2.r);
    }
    double need = std::max(x.r, x2.r);
    if (grid.r_max < need) grid.r_max = need;
    local = build_graph(spec, grid);
    graph = &local;
  }
  DistanceResult g = graph_distance(*graph, x, x2);
  if (!std::isfinite(g.value)) return g;

  CurvePolyline seed;
  seed.points.push_back(x);
  for (const auto& p : g.path.points) seed.points.push_back(p);
  seed.points.push_back(x2);
  DistanceResult refined = refine_geodesic(spec, seed, opts.refine);

  // the graph minimizer may route through the apex where a slightly longer
  // around-path is octile-penalized; descent cannot leave that saddle, so
  // also refine a straight-chart seed and keep the shorter result
  bool touches_apex = false;
  for (const auto& p : g.path.points) touches_apex = touches_apex || p.r <= 0.0;
  if (auto ring = ring_coords(base.boundary); ring && touches_apex) {
    CurvePolyline direct;
    double du = wrap_diff(x2.y.coords[0] - x.y.coords[0], ring->period);
    for (int i = 0; i < 33; ++i) {
      double t = i / 32.0;
      BoundaryPoint y;
      double s = std::fmod(x.y.coords[0] + t * du, ring->period);
      if (s < 0.0) s += ring->period;
      y.coords = Eigen::VectorXd::Constant(1, s);
      direct.points.push_back({y, x.r + t * (x2.r - x.r)});
    }
    DistanceResult alt = refine_geodesic(spec, direct, opts.refine);
    if (alt.value < refined.value) refined = alt;
  }
  if (refined.value > g.value + g.residual) return g;  // refinement failed to help
  return refined;
}

}  // namespace

DistanceResult conic_distance(const ConicMetricSpec& spec, const ChartPoint& x,
                              const ChartPoint& x2, const DistanceOptions& opts) {
  return dispatch_distance(MetricSpec{spec}, x, x2, opts);
}

DistanceResult ac_distance(const AcMetricSpec& spec, const ChartPoint& x,
                           const ChartPoint& x2, const DistanceOptions& opts) {
  return dispatch_distance(MetricSpec{spec}, x, x2, opts);
}

namespace {

double planar_segment_length(const PlanarChart& chart, const Eigen::Vector2d& a,
                             const Eigen::Vector2d& b, const QuadratureOptions& opts) {
  Eigen::Vector2d d = b - a;
  auto midsum = [&](int pieces) {
    double s = 0.0;
    for (int k = 0; k < pieces; ++k) {
      double t = (k + 0.5) / pieces;
      Eigen::Vector2d p = a + t * d;
      Eigen::Vector2d v = d / pieces;
      s += std::sqrt(std::max(0.0, v.dot(chart.metric(p) * v)));
    }
    return s;
  };
  int pieces = 1;
  double coarse = midsum(pieces);
  double prev = coarse;
  for (int level = 1; level <= opts.max_levels; ++level) {
    pieces *= 2;
    double fine = midsum(pieces);
    double extr = (4.0 * fine - coarse) / 3.0;
    if (std::abs(extr - prev) <= opts.rel_tol * std::max(1e-300, std::abs(extr))) return extr;
    coarse = fine;
    prev = extr;
  }
  return prev;
}

}  // namespace

double planar_curve_length(const PlanarChart& chart, const std::vector<Eigen::Vector2d>& pts,
                           const QuadratureOptions& opts) {
  double s = 0.0;
  for (size_t k = 0; k + 1 < pts.size(); ++k)
    s += planar_segment_length(chart, pts[k], pts[k + 1], opts);
  return s;
}

std::vector<Eigen::Vector2d> refine_planar_geodesic(const PlanarChart& chart,
                                                    std::vector<Eigen::Vector2d> seed,
                                                    const RefineOptions& opts,
                                                    int subdivide_rounds) {
  if (seed.size() < 2) throw std::invalid_argument("planar seed needs at least two points");
  QuadratureOptions fast{1e-6, 6};

  auto clamp_pt = [&](Eigen::Vector2d p) {
    p.x() = std::clamp(p.x(), chart.lo.x(), chart.hi.x());
    p.y() = std::clamp(p.y(), chart.lo.y(), chart.hi.y());
    return p;
  };

  for (int round = 0; round <= subdivide_rounds; ++round) {
    if (round > 0) {
      std::vector<Eigen::Vector2d> dense;
      dense.reserve(seed.size() * 2);
      for (size_t k = 0; k + 1 < seed.size(); ++k) {
        dense.push_back(seed[k]);
        dense.push_back(clamp_pt(0.5 * (seed[k] + seed[k + 1])));
      }
      dense.push_back(seed.back());
      seed = std::move(dense);
    }
    const int n = static_cast<int>(seed.size());
    double length = planar_curve_length(chart, seed, fast);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
      double before = length;
      for (int i = 1; i + 1 < n; ++i) {
        double local = planar_segment_length(chart, seed[i - 1], seed[i], fast) +
                       planar_segment_length(chart, seed[i], seed[i + 1], fast);
        double h = 0.5 * ((seed[i + 1] - seed[i - 1]).norm() + 1e-4);
        for (int shrink = 0; shrink < 12; ++shrink) {
          bool moved = false;
          static const int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1},  {0, -1},
                                         {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
          for (const auto& d : dirs) {
            Eigen::Vector2d cand = clamp_pt(seed[i] + h * Eigen::Vector2d(d[0], d[1]));
            Eigen::Vector2d old = seed[i];
            seed[i] = cand;
            double c = planar_segment_length(chart, seed[i - 1], seed[i], fast) +
                       planar_segment_length(chart, seed[i], seed[i + 1], fast);
            if (c < local - 1e-15) {
              local = c;
              moved = true;
              break;
            }
            seed[i] = old;
          }
          if (!moved) h *= 0.5;
        }
      }
      length = planar_curve_length(chart, seed, fast);
      if ((before - length) <= opts.tol * std::max(before, 1e-300)) break;
    }
  }
  return seed;
}

}  // namespace conic
