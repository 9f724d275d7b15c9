#include "conic/lne.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

namespace conic {

namespace {

std::vector<int> effective_grid(const ParamSubmanifold& X) {
  std::vector<int> g = X.grid_sizes;
  int def = X.dim == 1 ? 257 : 49;
  while (static_cast<int>(g.size()) < X.dim) g.push_back(def);
  for (int v : g)
    if (v < 2) throw std::invalid_argument("submanifold grid needs at least 2 samples per axis");
  return g;
}

Eigen::VectorXd grid_param(const ParamSubmanifold& X, const std::vector<int>& g,
                           const std::vector<int>& idx) {
  Eigen::VectorXd p(X.dim);
  for (int a = 0; a < X.dim; ++a) {
    double t = static_cast<double>(idx[a]) / (g[a] - 1);
    p[a] = X.lo[a] + t * (X.hi[a] - X.lo[a]);
  }
  return p;
}

double scaled_uniform(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

}  // namespace

PSubmanifoldDiagnostics check_p_submanifold(const ParamSubmanifold& X,
                                            const ConicMetricSpec& spec, double tol) {
  if (!std::holds_alternative<Circle>(spec.boundary) &&
      !std::holds_alternative<FlatTorus>(spec.boundary))
    throw std::domain_error("transversality check needs a ring boundary chart");
  if (X.dim < 1 || X.dim > 2) throw std::invalid_argument("submanifold dimension must be 1 or 2");
  if (X.lo.size() != X.dim || X.hi.size() != X.dim)
    throw std::invalid_argument("parameter bounds do not match dimension");

  PSubmanifoldDiagnostics diag;
  diag.min_radial_component = std::numeric_limits<double>::infinity();

  auto g = effective_grid(X);
  const double r_eps = 1e-9;

  double period = std::holds_alternative<Circle>(spec.boundary)
                      ? std::get<Circle>(spec.boundary).circumference
                      : std::get<FlatTorus>(spec.boundary).periods[0];
  // one-sided difference quotient, so branch points (piecewise-smooth germs
  // meeting at the apex) are judged per branch
  auto sided_tangent = [&](const Eigen::VectorXd& p, int axis, int side, double& dy, double& dr) {
    double span = X.hi[axis] - X.lo[axis];
    double h = side * 1e-6 * std::max(1.0, std::abs(span));
    // difference two points strictly on the chosen side, so branch germs
    // whose chart angle jumps across the base point are judged per branch
    Eigen::VectorXd pa = p, pm = p;
    pa[axis] = std::clamp(p[axis] + h, X.lo[axis], X.hi[axis]);
    pm[axis] = std::clamp(p[axis] + h / 2, X.lo[axis], X.hi[axis]);
    double denom = pa[axis] - pm[axis];
    if (denom == 0) {
      dy = dr = 0;
      return false;
    }
    ChartPoint ca = X.embed(pa), cb = X.embed(pm);
    double d = ca.y.coords[0] - cb.y.coords[0];
    d -= period * std::round(d / period);
    dy = d / denom;
    dr = (ca.r - cb.r) / denom;
    return true;
  };
  auto tangent_at = [&](const Eigen::VectorXd& p, int axis, double& dy, double& dr) {
    double fy, fr;
    if (!sided_tangent(p, axis, +1, fy, fr)) sided_tangent(p, axis, -1, fy, fr);
    dy = fy;
    dr = fr;
  };

  std::vector<int> idx(X.dim, 0);
  bool done = false;
  while (!done) {
    Eigen::VectorXd p = grid_param(X, g, idx);
    ChartPoint c = X.embed(p);
    if (c.r <= r_eps) {
      ++diag.boundary_points;
      double best = 0.0;
      if (X.dim == 1) {
        // every branch through the point must be transversal
        best = 1.0;
        bool any = false;
        for (int side : {+1, -1}) {
          double dy, dr;
          if (!sided_tangent(p, 0, side, dy, dr)) continue;
          any = true;
          double n = std::sqrt(dy * dy + dr * dr);
          best = std::min(best, n > 0 ? std::abs(dr) / n : 0.0);
        }
        if (!any) best = 0.0;
      } else {
        double dy0, dr0, dy1, dr1;
        tangent_at(p, 0, dy0, dr0);
        tangent_at(p, 1, dy1, dr1);
        // sweep directions in the tangent plane
        for (int k = 0; k < 64; ++k) {
          double a = M_PI * k / 64.0;
          double ca_ = std::cos(a), sa = std::sin(a);
          double dy = ca_ * dy0 + sa * dy1;
          double dr = ca_ * dr0 + sa * dr1;
          double n = std::sqrt(dy * dy + dr * dr);
          if (n > 0) best = std::max(best, std::abs(dr) / n);
        }
      }
      if (best < diag.min_radial_component) {
        diag.min_radial_component = best;
        diag.worst_param = p;
      }
    }
    // advance multi-index
    int a = 0;
    for (; a < X.dim; ++a) {
      if (++idx[a] < g[a]) break;
      idx[a] = 0;
    }
    if (a == X.dim) done = true;
  }

  if (diag.boundary_points == 0) {
    diag.pass = true;
    diag.min_radial_component = 0.0;
    diag.note = "no boundary trace sampled; condition holds vacuously";
  } else {
    diag.pass = diag.min_radial_component >= tol;
  }
  return diag;
}

double outer_distance(const ParamSubmanifold& X, const ConicMetricSpec& spec,
                      const Eigen::VectorXd& p, const Eigen::VectorXd& p2,
                      const DistanceOptions& opts) {
  return conic_distance(spec, X.embed(p), X.embed(p2), opts).value;
}

InnerMetric::InnerMetric(ParamSubmanifold X, ConicMetricSpec spec)
    : X_(std::move(X)), spec_(std::move(spec)) {
  auto g = effective_grid(X_);
  std::vector<int> strides(X_.dim, 1);
  int total = 1;
  for (int a = 0; a < X_.dim; ++a) {
    strides[a] = total;
    total *= g[a];
  }
  params_.reserve(total);
  radii_.reserve(total);
  std::vector<int> idx(X_.dim, 0);
  for (int i = 0; i < total; ++i) {
    Eigen::VectorXd p = grid_param(X_, g, idx);
    params_.push_back(p);
    radii_.push_back(X_.embed(p).r);
    int a = 0;
    for (; a < X_.dim; ++a) {
      if (++idx[a] < g[a]) break;
      idx[a] = 0;
    }
  }

  adjacency_.assign(total, {});
  auto link = [&](int i, int j) {
    double w = edge_weight(params_[i], params_[j]);
    if (!std::isfinite(w)) return;
    adjacency_[i].push_back({j, w});
    adjacency_[j].push_back({i, w});
  };
  if (X_.dim == 1) {
    for (int i = 0; i + 1 < total; ++i) link(i, i + 1);
  } else {
    for (int j = 0; j < g[1]; ++j)
      for (int i = 0; i < g[0]; ++i) {
        int n = i + j * g[0];
        if (i + 1 < g[0]) link(n, n + 1);
        if (j + 1 < g[1]) link(n, n + g[0]);
        if (i + 1 < g[0] && j + 1 < g[1]) link(n, n + 1 + g[0]);
        if (i > 0 && j + 1 < g[1]) link(n, n - 1 + g[0]);
      }
  }

  component_.assign(total, -1);
  int comp = 0;
  for (int s = 0; s < total; ++s) {
    if (component_[s] >= 0) continue;
    std::vector<int> stack = {s};
    component_[s] = comp;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (auto& [v, w] : adjacency_[u])
        if (component_[v] < 0) {
          component_[v] = comp;
          stack.push_back(v);
        }
    }
    ++comp;
  }
}

double InnerMetric::edge_weight(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  // 5-point embedded polyline keeps the chord error small even where the
  // submanifold bends within the chart.
  CurvePolyline curve;
  for (int k = 0; k <= 4; ++k) {
    double t = k / 4.0;
    curve.points.push_back(X_.embed(a + t * (b - a)));
  }
  return curve_length(MetricSpec{spec_}, curve);
}

int InnerMetric::nearest(const Eigen::VectorXd& p) const {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int i = 0; i < node_count(); ++i) {
    double d = (params_[i] - p).norm();
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

double InnerMetric::distance(const Eigen::VectorXd& p, const Eigen::VectorXd& p2) const {
  int s = nearest(p), t = nearest(p2);
  if (component_[s] != component_[t]) return std::numeric_limits<double>::infinity();

  std::vector<double> dist(node_count(), std::numeric_limits<double>::infinity());
  std::vector<int> prev(node_count(), -1);
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
  dist[s] = 0;
  pq.push({0, s});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == t) break;
    for (auto& [v, w] : adjacency_[u])
      if (d + w < dist[v]) {
        dist[v] = d + w;
        prev[v] = u;
        pq.push({d + w, v});
      }
  }

  // reconstruct the parameter-space polyline, pin the exact endpoints, then
  // shrink it by coordinate pattern descent inside the parameter box
  std::vector<Eigen::VectorXd> path;
  for (int u = t; u != -1; u = prev[u]) path.push_back(params_[u]);
  std::reverse(path.begin(), path.end());
  if (path.empty()) path.push_back(params_[s]);
  path.insert(path.begin(), p);
  path.push_back(p2);

  auto length_of = [&](const std::vector<Eigen::VectorXd>& pts) {
    double total = 0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) total += edge_weight(pts[i], pts[i + 1]);
    return total;
  };

  double best = length_of(path);
  if (path.size() > 2) {
    double step = 0.0;
    for (int a = 0; a < X_.dim; ++a) step = std::max(step, (X_.hi[a] - X_.lo[a]));
    step *= 0.05;
    for (int iter = 0; iter < 60 && step > 1e-9; ++iter) {
      bool improved = false;
      for (size_t i = 1; i + 1 < path.size(); ++i) {
        double local = edge_weight(path[i - 1], path[i]) + edge_weight(path[i], path[i + 1]);
        Eigen::VectorXd bestp = path[i];
        double bestl = local;
        for (int a = 0; a < X_.dim; ++a)
          for (int sgn : {-1, 1}) {
            Eigen::VectorXd cand = path[i];
            cand[a] = std::clamp(cand[a] + sgn * step, X_.lo[a], X_.hi[a]);
            double l = edge_weight(path[i - 1], cand) + edge_weight(cand, path[i + 1]);
            if (l < bestl) {
              bestl = l;
              bestp = cand;
            }
          }
        if (bestl < local - 1e-15) {
          path[i] = bestp;
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::min(best, length_of(path));
  }
  return best;
}

LneReport lne_ratio_scan(const InnerMetric& inner, const LneScanOptions& opts,
                         const AmbientDistance& ambient) {
  const ParamSubmanifold& X = inner.submanifold();
  const ConicMetricSpec& spec = inner.chart();
  AmbientDistance amb = ambient;
  if (!amb)
    amb = [&spec](const ChartPoint& a, const ChartPoint& b) {
      return conic_distance(spec, a, b).value;
    };

  LneReport rep;
  rep.name = X.name;
  std::mt19937_64 rng(opts.seed);

  // nodes sorted once by radius for stratified picks
  std::vector<int> by_radius(inner.node_count());
  for (int i = 0; i < inner.node_count(); ++i) by_radius[i] = i;
  std::sort(by_radius.begin(), by_radius.end(),
            [&](int a, int b) { return inner.node_radius(a) < inner.node_radius(b); });

  double running_sup = 0.0;
  for (int k = 0; k < opts.rungs; ++k) {
    LneScaleRecord rec;
    rec.scale = opts.top_scale / std::pow(2.0, k);
    double eps = rec.scale;

    // pool: every node with 0 < r <= eps, subsampled when large but always
    // keeping the nodes closest to the apex
    std::vector<int> pool;
    for (int i : by_radius) {
      double r = inner.node_radius(i);
      if (r > eps) break;
      if (r > 0) pool.push_back(i);
    }
    const size_t pool_cap = 48;
    if (pool.size() > pool_cap) {
      std::vector<int> kept(pool.begin(), pool.begin() + 8);
      std::vector<int> rest(pool.begin() + 8, pool.end());
      for (size_t i = rest.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(scaled_uniform(rng) * i) % i;
        std::swap(rest[i - 1], rest[j]);
      }
      kept.insert(kept.end(), rest.begin(), rest.begin() + (pool_cap - kept.size()));
      pool = std::move(kept);
    }

    // inner distances cost a shortest-path run each, so prescreen all pool
    // pairs with the cheap proxy (r + r') / outer -- it is exact for pairs
    // forced through the apex and harmless elsewhere -- then verify the most
    // promising half plus a random half
    struct Cand {
      int a, b;
      double outer, proxy;
    };
    std::vector<Cand> cands;
    for (size_t i = 0; i < pool.size(); ++i)
      for (size_t j = i + 1; j < pool.size(); ++j) {
        int a = pool[i], b = pool[j];
        if (inner.component(a) != inner.component(b)) continue;
        // probe this rung's scale: the larger radius must sit in the annulus
        // (eps/2, eps], while the smaller may go all the way to the apex
        if (std::max(inner.node_radius(a), inner.node_radius(b)) <= eps / 2) continue;
        double out = amb(X.embed(inner.node_param(a)), X.embed(inner.node_param(b)));
        if (out <= 1e-12) continue;
        cands.push_back({a, b, out, (inner.node_radius(a) + inner.node_radius(b)) / out});
      }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
      return x.proxy > y.proxy || (x.proxy == y.proxy && std::tie(x.a, x.b) < std::tie(y.a, y.b));
    });
    size_t budget = static_cast<size_t>(std::max(2, opts.pairs_per_scale));
    std::vector<Cand> chosen(cands.begin(),
                             cands.begin() + std::min(budget / 2, cands.size()));
    for (size_t t = chosen.size(); t < std::min(budget, cands.size()); ++t)
      chosen.push_back(cands[static_cast<size_t>(scaled_uniform(rng) * cands.size()) %
                             cands.size()]);

    for (const Cand& c : chosen) {
      const Eigen::VectorXd &pa = inner.node_param(c.a), &pb = inner.node_param(c.b);
      double in = inner.distance(pa, pb);
      if (!std::isfinite(in)) continue;
      rep.min_inner_minus_outer = std::min(rep.min_inner_minus_outer, in - c.outer);
      double ratio = in / c.outer;
      ++rec.pairs;
      if (ratio > rec.sup) {
        rec.sup = ratio;
        rec.witness_a = pa;
        rec.witness_b = pb;
      }
    }
    rec.skipped = rec.pairs == 0;
    if (!rec.skipped && rec.sup > running_sup) {
      running_sup = rec.sup;
      rep.sup = rec.sup;
      rep.witness_a = rec.witness_a;
      rep.witness_b = rec.witness_b;
    }
    rep.ladder.push_back(rec);
  }

  // diverging iff some window of >= 3 consecutive usable rungs shows per-rung
  // growth above 5% and cumulative growth at least growth_tol
  std::vector<double> sups;
  for (auto& rec : rep.ladder)
    if (!rec.skipped) sups.push_back(rec.sup);
  int run = 0;
  double run_start = 0;
  bool diverging = false;
  for (size_t i = 1; i < sups.size(); ++i) {
    if (sups[i] > 1.05 * sups[i - 1]) {
      if (run == 0) run_start = sups[i - 1];
      ++run;
      if (run >= 3 && sups[i] >= opts.growth_tol * run_start) diverging = true;
    } else {
      run = 0;
    }
  }
  rep.verdict = diverging ? LneReport::Verdict::Diverging : LneReport::Verdict::Bounded;
  return rep;
}

CylinderLneReport cylinder_lne_check(double arc_start, double arc_end, double boundary_constant,
                                     const ConicMetricSpec& spec, const LneScanOptions& opts) {
  if (!std::holds_alternative<Circle>(spec.boundary))
    throw std::domain_error("cylinder check needs a circle boundary");
  if (!(arc_end > arc_start)) throw std::invalid_argument("empty boundary arc");

  ParamSubmanifold X;
  X.name = "cylinder";
  X.dim = 2;
  X.lo = Eigen::Vector2d(arc_start, 0.0);
  X.hi = Eigen::Vector2d(arc_end, opts.top_scale);
  X.embed = [](const Eigen::VectorXd& p) {
    BoundaryPoint y;
    y.coords = Eigen::VectorXd::Constant(1, p[0]);
    return ChartPoint{y, p[1]};
  };

  CylinderLneReport rep;
  rep.boundary_constant = boundary_constant;
  InnerMetric inner(X, spec);
  rep.scan = lne_ratio_scan(inner, opts);
  rep.predicted_cap = 2.0 * std::max(1.0, boundary_constant);
  rep.within_prediction = rep.scan.verdict == LneReport::Verdict::Bounded &&
                          rep.scan.sup <= rep.predicted_cap * 1.1;
  return rep;
}

}  // namespace conic
