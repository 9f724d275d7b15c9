#include "conic/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace conic {

namespace {

constexpr double kSnapTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap(double x, double period) {
  double y = std::fmod(x, period);
  if (y < 0.0) y += period;
  return y;
}

struct MeshPos {
  int edge;
  double t;  // 0 at edges[edge][0], 1 at edges[edge][1]
};

MeshPos mesh_pos(const MeshGraph& mesh, const BoundaryPoint& p) {
  if (p.coords.size() != 2) throw std::invalid_argument("mesh point needs [edge, t] coordinates");
  int e = static_cast<int>(std::llround(p.coords[0]));
  double t = p.coords[1];
  if (e < 0 || e >= static_cast<int>(mesh.edges.size()))
    throw std::invalid_argument("mesh edge index out of range");
  if (t < -kSnapTol || t > 1.0 + kSnapTol)
    throw std::invalid_argument("mesh barycentric position outside [0,1]");
  return {e, std::clamp(t, 0.0, 1.0)};
}

// Dijkstra over mesh vertices from a set of seeded sources.
std::vector<double> mesh_dijkstra(const MeshGraph& mesh,
                                  const std::vector<std::pair<int, double>>& seeds,
                                  std::vector<int>* parent = nullptr) {
  const int n = static_cast<int>(mesh.vertices.size());
  std::vector<double> dist(n, kInf);
  if (parent) parent->assign(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (auto [v, d] : seeds) {
    if (d < dist[v]) {
      dist[v] = d;
      heap.push({d, v});
    }
  }
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (auto [w, e] : mesh.adjacency[v]) {
      double nd = d + mesh.weights[e];
      if (nd < dist[w]) {
        dist[w] = nd;
        if (parent) (*parent)[w] = v;
        heap.push({nd, w});
      }
    }
  }
  return dist;
}

double mesh_distance(const MeshGraph& mesh, const MeshPos& a, const MeshPos& b) {
  const auto& ea = mesh.edges[a.edge];
  const auto& eb = mesh.edges[b.edge];
  double wa = mesh.weights[a.edge], wb = mesh.weights[b.edge];
  double best = kInf;
  if (a.edge == b.edge) best = std::abs(a.t - b.t) * wa;
  auto dist = mesh_dijkstra(mesh, {{ea[0], a.t * wa}, {ea[1], (1.0 - a.t) * wa}});
  best = std::min(best, dist[eb[0]] + b.t * wb);
  best = std::min(best, dist[eb[1]] + (1.0 - b.t) * wb);
  return best;
}

// Vertex chain of a minimizing path plus the partial end offsets; the chain
// may be empty when the whole path lives on one edge.
struct MeshPath {
  std::vector<int> chain;
  double length = 0.0;
};

MeshPath mesh_shortest_chain(const MeshGraph& mesh, const MeshPos& a, const MeshPos& b) {
  const auto& ea = mesh.edges[a.edge];
  const auto& eb = mesh.edges[b.edge];
  double wa = mesh.weights[a.edge], wb = mesh.weights[b.edge];
  std::vector<int> parent;
  auto dist = mesh_dijkstra(mesh, {{ea[0], a.t * wa}, {ea[1], (1.0 - a.t) * wa}}, &parent);

  double via0 = dist[eb[0]] + b.t * wb;
  double via1 = dist[eb[1]] + (1.0 - b.t) * wb;
  int exit_vertex = via0 <= via1 ? eb[0] : eb[1];
  double best = std::min(via0, via1);

  MeshPath path;
  if (a.edge == b.edge && std::abs(a.t - b.t) * wa <= best) {
    path.length = std::abs(a.t - b.t) * wa;
    return path;
  }
  path.length = best;
  std::vector<int> rev;
  for (int v = exit_vertex; v != -1; v = parent[v]) rev.push_back(v);
  path.chain.assign(rev.rbegin(), rev.rend());
  return path;
}

Eigen::VectorXd slerp(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double t) {
  double c = std::clamp(u.dot(v), -1.0, 1.0);
  double ang = std::acos(c);
  if (ang < 1e-14) return u;
  Eigen::VectorXd w;
  if (ang > M_PI - 1e-12) {
    // antipodal: pick a deterministic orthogonal direction
    Eigen::VectorXd o = Eigen::VectorXd::Zero(u.size());
    int k = 0;
    for (int i = 1; i < u.size(); ++i)
      if (std::abs(u[i]) < std::abs(u[k])) k = i;
    o[k] = 1.0;
    w = (o - o.dot(u) * u).normalized();
  } else {
    w = (v - c * u).normalized();
  }
  return std::cos(t * ang) * u + std::sin(t * ang) * w;
}

}  // namespace

void MeshGraph::finalize() {
  const int n = static_cast<int>(vertices.size());
  if (n == 0) throw std::invalid_argument("mesh has no vertices");
  if (edges.size() != weights.size()) throw std::invalid_argument("mesh edge/weight count mismatch");
  adjacency.assign(n, {});
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    auto [i, j] = edges[e];
    if (i < 0 || i >= n || j < 0 || j >= n) throw std::invalid_argument("mesh edge index out of range");
    if (i == j) throw std::invalid_argument("mesh self-loop");
    if (!(weights[e] > 0.0)) throw std::invalid_argument("mesh edge weight must be positive");
    adjacency[i].push_back({j, e});
    adjacency[j].push_back({i, e});
  }
  // connectivity
  std::vector<char> seen(n, 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (auto [w, e] : adjacency[v])
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument("mesh is not connected");
}

BoundaryPoint make_circle_point(double s) {
  BoundaryPoint p;
  p.coords = Eigen::VectorXd::Constant(1, s);
  return p;
}

BoundaryPoint make_sphere_point(const Eigen::VectorXd& u) { return {u}; }
BoundaryPoint make_torus_point(const Eigen::VectorXd& t) { return {t}; }

BoundaryPoint make_mesh_vertex(const MeshGraph& mesh, int vertex) {
  for (int e = 0; e < static_cast<int>(mesh.edges.size()); ++e) {
    if (mesh.edges[e][0] == vertex) return {Eigen::Vector2d(e, 0.0)};
    if (mesh.edges[e][1] == vertex) return {Eigen::Vector2d(e, 1.0)};
  }
  throw std::invalid_argument("mesh vertex is isolated");
}

BoundaryPoint make_mesh_edge_point(const MeshGraph& mesh, int edge, double t) {
  if (edge < 0 || edge >= static_cast<int>(mesh.edges.size()))
    throw std::invalid_argument("mesh edge index out of range");
  return {Eigen::Vector2d(edge, t)};
}

int boundary_dim(const BoundaryGeometry& geom) {
  return std::visit(
      [](const auto& g) -> int {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Circle>) return 1;
        else if constexpr (std::is_same_v<T, RoundSphere>) return g.dimension;
        else if constexpr (std::is_same_v<T, FlatTorus>) return static_cast<int>(g.periods.size());
        else return 1;  // mesh graphs approximate 1-dimensional complexes
      },
      geom);
}

void validate_geometry(const BoundaryGeometry& geom) {
  std::visit(
      [](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Circle>) {
          if (!(g.circumference > 0.0)) throw std::invalid_argument("circle circumference must be positive");
        } else if constexpr (std::is_same_v<T, RoundSphere>) {
          if (g.dimension < 1) throw std::invalid_argument("sphere dimension must be >= 1");
          if (!(g.radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
        } else if constexpr (std::is_same_v<T, FlatTorus>) {
          if (g.periods.size() == 0) throw std::invalid_argument("torus needs at least one period");
          for (int i = 0; i < g.periods.size(); ++i)
            if (!(g.periods[i] > 0.0)) throw std::invalid_argument("torus periods must be positive");
        } else {
          if (g.adjacency.empty()) throw std::invalid_argument("mesh not finalized");
        }
      },
      geom);
}

BoundaryPoint normalize_point(const BoundaryGeometry& geom, const BoundaryPoint& p) {
  return std::visit(
      [&](const auto& g) -> BoundaryPoint {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Circle>) {
          if (p.coords.size() != 1) throw std::invalid_argument("circle point needs one coordinate");
          return make_circle_point(wrap(p.coords[0], g.circumference));
        } else if constexpr (std::is_same_v<T, RoundSphere>) {
          if (p.coords.size() != g.dimension + 1)
            throw std::invalid_argument("sphere point coordinate count mismatch");
          double n = p.coords.norm();
          if (std::abs(n - 1.0) > 1e-6) throw std::invalid_argument("sphere point is not a unit vector");
          return {p.coords / n};
        } else if constexpr (std::is_same_v<T, FlatTorus>) {
          if (p.coords.size() != g.periods.size())
            throw std::invalid_argument("torus point coordinate count mismatch");
          Eigen::VectorXd q(p.coords.size());
          for (int i = 0; i < q.size(); ++i) q[i] = wrap(p.coords[i], g.periods[i]);
          return {q};
        } else {
          MeshPos m = mesh_pos(g, p);
          if (m.t < kSnapTol) m.t = 0.0;
          if (m.t > 1.0 - kSnapTol) m.t = 1.0;
          return {Eigen::Vector2d(m.edge, m.t)};
        }
      },
      geom);
}

double boundary_distance(const BoundaryGeometry& geom, const BoundaryPoint& a,
                         const BoundaryPoint& b) {
  BoundaryPoint pa = normalize_point(geom, a);
  BoundaryPoint pb = normalize_point(geom, b);
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Circle>) {
          double d = std::abs(pa.coords[0] - pb.coords[0]);
          return std::min(d, g.circumference - d);
        } else if constexpr (std::is_same_v<T, RoundSphere>) {
          double c = std::clamp(pa.coords.dot(pb.coords), -1.0, 1.0);
          return g.radius * std::acos(c);
        } else if constexpr (std::is_same_v<T, FlatTorus>) {
          double s = 0.0;
          for (int i = 0; i < pa.coords.size(); ++i) {
            double d = std::abs(pa.coords[i] - pb.coords[i]);
            d = std::min(d, g.periods[i] - d);
            s += d * d;
          }
          return std::sqrt(s);
        } else {
          return mesh_distance(g, mesh_pos(g, pa), mesh_pos(g, pb));
        }
      },
      geom);
}

BoundaryPoint boundary_interpolate(const BoundaryGeometry& geom, const BoundaryPoint& a,
                                   const BoundaryPoint& b, double t) {
  BoundaryPoint pa = normalize_point(geom, a);
  BoundaryPoint pb = normalize_point(geom, b);
  t = std::clamp(t, 0.0, 1.0);
  return std::visit(
      [&](const auto& g) -> BoundaryPoint {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Circle>) {
          double sa = pa.coords[0], sb = pb.coords[0];
          double d = sb - sa;
          if (d > 0.5 * g.circumference) d -= g.circumference;
          if (d < -0.5 * g.circumference) d += g.circumference;
          return make_circle_point(wrap(sa + t * d, g.circumference));
        } else if constexpr (std::is_same_v<T, RoundSphere>) {
          return {slerp(pa.coords, pb.coords, t)};
        } else if constexpr (std::is_same_v<T, FlatTorus>) {
          Eigen::VectorXd q(pa.coords.size());
          for (int i = 0; i < q.size(); ++i) {
            double d = pb.coords[i] - pa.coords[i];
            if (d > 0.5 * g.periods[i]) d -= g.periods[i];
            if (d < -0.5 * g.periods[i]) d += g.periods[i];
            q[i] = wrap(pa.coords[i] + t * d, g.periods[i]);
          }
          return {q};
        } else {
          MeshPos ma = mesh_pos(g, pa), mb = mesh_pos(g, pb);
          MeshPath path = mesh_shortest_chain(g, ma, mb);
          double target = t * path.length;
          if (path.chain.empty()) {
            double tt = ma.t + (mb.t - ma.t) * t;
            return make_mesh_edge_point(g, ma.edge, tt);
          }
          // walk: a -> chain[0] -> ... -> chain.back() -> b
          double head = ma.t * g.weights[ma.edge];
          int enter = path.chain.front();
          if (enter == g.edges[ma.edge][1]) head = (1.0 - ma.t) * g.weights[ma.edge];
          if (target <= head) {
            double tt = enter == g.edges[ma.edge][0] ? ma.t - target / g.weights[ma.edge]
                                                     : ma.t + target / g.weights[ma.edge];
            return make_mesh_edge_point(g, ma.edge, std::clamp(tt, 0.0, 1.0));
          }
          double acc = head;
          for (size_t k = 0; k + 1 < path.chain.size(); ++k) {
            int u = path.chain[k], v = path.chain[k + 1];
            int edge = -1;
            for (auto [w, e] : g.adjacency[u])
              if (w == v) { edge = e; break; }
            double wlen = g.weights[edge];
            if (target <= acc + wlen) {
              double frac = (target - acc) / wlen;
              double tt = g.edges[edge][0] == u ? frac : 1.0 - frac;
              return make_mesh_edge_point(g, edge, tt);
            }
            acc += wlen;
          }
          int exit = path.chain.back();
          double rem = std::max(0.0, path.length - acc);
          double tt = exit == g.edges[mb.edge][0] ? rem / g.weights[mb.edge]
                                                  : 1.0 - rem / g.weights[mb.edge];
          return make_mesh_edge_point(g, mb.edge, std::clamp(tt, 0.0, 1.0));
        }
      },
      geom);
}

std::vector<BoundaryPoint> boundary_geodesic(const BoundaryGeometry& geom,
                                             const BoundaryPoint& a, const BoundaryPoint& b,
                                             int steps) {
  if (steps < 2) throw std::invalid_argument("boundary_geodesic needs steps >= 2");
  if (std::holds_alternative<MeshGraph>(geom)) {
    double d = boundary_distance(geom, a, b);
    if (!std::isfinite(d)) throw std::runtime_error("no path: disconnected mesh components");
  }
  std::vector<BoundaryPoint> path;
  path.reserve(steps);
  for (int k = 0; k < steps; ++k)
    path.push_back(boundary_interpolate(geom, a, b, static_cast<double>(k) / (steps - 1)));
  return path;
}

double boundary_diameter(const BoundaryGeometry& geom) {
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Circle>) {
          return 0.5 * g.circumference;
        } else if constexpr (std::is_same_v<T, RoundSphere>) {
          return g.radius * M_PI;
        } else if constexpr (std::is_same_v<T, FlatTorus>) {
          return 0.5 * g.periods.norm();
        } else {
          double best = 0.0;
          for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
            auto dist = mesh_dijkstra(g, {{v, 0.0}});
            for (double d : dist) best = std::max(best, d);
          }
          return best;
        }
      },
      geom);
}

double boundary_tangent_norm_sq(const BoundaryGeometry& geom, const BoundaryPoint& y,
                                const Eigen::VectorXd& xi) {
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Circle>) {
          if (xi.size() != 1) throw std::invalid_argument("circle tangent needs one coordinate");
          return xi[0] * xi[0];
        } else if constexpr (std::is_same_v<T, RoundSphere>) {
          if (xi.size() != g.dimension + 1)
            throw std::invalid_argument("sphere tangent coordinate count mismatch");
          return g.radius * g.radius * xi.squaredNorm();
        } else if constexpr (std::is_same_v<T, FlatTorus>) {
          if (xi.size() != g.periods.size())
            throw std::invalid_argument("torus tangent coordinate count mismatch");
          return xi.squaredNorm();
        } else {
          (void)y;
          throw std::domain_error("tangent norms are not defined on mesh boundaries");
        }
      },
      geom);
}

MeshGraph load_mesh(std::istream& in) {
  MeshGraph mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      std::vector<double> c;
      double x;
      while (ls >> x) c.push_back(x);
      if (c.empty()) throw std::invalid_argument("mesh line " + std::to_string(lineno) + ": vertex needs coordinates");
      mesh.vertices.push_back(Eigen::Map<Eigen::VectorXd>(c.data(), c.size()));
    } else if (tag == "e") {
      int i, j;
      double w;
      if (!(ls >> i >> j >> w))
        throw std::invalid_argument("mesh line " + std::to_string(lineno) + ": edge needs i j weight");
      mesh.edges.push_back({i, j});
      mesh.weights.push_back(w);
    } else {
      throw std::invalid_argument("mesh line " + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
  }
  mesh.finalize();
  return mesh;
}

MeshGraph load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  return load_mesh(in);
}

}  // namespace conic
