#include "conic/quotient.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

double ring_period(const BoundaryGeometry& geom) {
  if (const auto* c = std::get_if<Circle>(&geom)) return c->circumference;
  if (const auto* t = std::get_if<FlatTorus>(&geom))
    if (t->periods.size() == 1) return t->periods[0];
  throw std::invalid_argument("seams require ring boundaries");
}

}  // namespace

ChartPoint conic_inversion(const ChartPoint& x) {
  if (x.r <= 0.0) throw std::domain_error("conic inversion is singular at r = 0");
  return {x.y, 1.0 / x.r};
}

QuotientSpace::QuotientSpace(std::vector<ChartPiece> pieces, std::vector<Seam> seams)
    : pieces_(std::move(pieces)), seams_(std::move(seams)) {
  if (pieces_.empty()) throw std::invalid_argument("quotient space needs at least one piece");

  int total = 0;
  for (auto& piece : pieces_) {
    piece.spec.validate();
    GridDiscretization grid = piece.grid;
    if (piece.ac_end) {
      grid.include_apex = false;
      if (!(grid.r_min > 0.0)) throw std::invalid_argument("ac end grid needs r_min > 0");
    } else {
      grid.include_apex = true;
      if (piece.apex.empty())
        throw std::invalid_argument("conic piece needs an apex label for its boundary component");
    }
    MetricSpec spec = piece.ac_end ? MetricSpec{AcMetricSpec{piece.spec}} : MetricSpec{piece.spec};
    graphs_.push_back(build_graph(spec, grid));
    piece_offset_.push_back(total);
    total += static_cast<int>(graphs_.back().nodes.size());
  }

  UnionFind uf(total);
  for (const auto& seam : seams_) {
    if (seam.piece_a < 0 || seam.piece_a >= static_cast<int>(pieces_.size()) ||
        seam.piece_b < 0 || seam.piece_b >= static_cast<int>(pieces_.size()))
      throw std::invalid_argument("seam piece index out of range");
    const ChartGraph& ga = graphs_[seam.piece_a];
    const ChartGraph& gb = graphs_[seam.piece_b];
    if (!ga.ring || !gb.ring) throw std::invalid_argument("seams require ring boundaries");
    int ny = static_cast<int>(ga.samples.size());
    if (ny != static_cast<int>(gb.samples.size()))
      throw std::invalid_argument("seam pieces need matching boundary sample counts");
    double pa = ring_period(pieces_[seam.piece_a].spec.boundary);
    double pb = ring_period(pieces_[seam.piece_b].spec.boundary);
    if (std::abs(pa - pb) > 1e-9 * std::max(pa, pb))
      throw std::invalid_argument("seam pieces need matching boundary periods");
    double step = pa / ny;
    int shift = static_cast<int>(std::llround(seam.offset / step));
    if (std::abs(seam.offset - shift * step) > 1e-9)
      throw std::invalid_argument("seam offset must align with the boundary sample grid");
    int top_a = ga.grid.n_r - 1, top_b = gb.grid.n_r - 1;
    for (int i = 0; i < ny; ++i) {
      int ia = piece_offset_[seam.piece_a] + ga.node_index(i, top_a);
      int ib = piece_offset_[seam.piece_b] + gb.node_index(((i + shift) % ny + ny) % ny, top_b);
      uf.unite(ia, ib);
    }
  }

  canonical_.assign(total, -1);
  for (int raw = 0; raw < total; ++raw) {
    int root = uf.find(raw);
    if (canonical_[root] == -1) {
      canonical_[root] = static_cast<int>(nodes_.size());
      int piece = static_cast<int>(std::upper_bound(piece_offset_.begin(), piece_offset_.end(), root) -
                                   piece_offset_.begin()) - 1;
      nodes_.push_back(graphs_[piece].nodes[root - piece_offset_[piece]]);
      node_piece_.push_back(piece);
    }
    canonical_[raw] = canonical_[root];
  }

  adjacency_.assign(nodes_.size(), {});
  for (size_t p = 0; p < graphs_.size(); ++p) {
    const ChartGraph& g = graphs_[p];
    for (int v = 0; v < static_cast<int>(g.nodes.size()); ++v) {
      int cv = canonical_[piece_offset_[p] + v];
      for (auto [w, len] : g.adjacency[v])
        adjacency_[cv].push_back({canonical_[piece_offset_[p] + w], len});
    }
  }

  // connected components of the merged graph
  node_component_.assign(nodes_.size(), -1);
  int comp = 0;
  for (size_t start = 0; start < nodes_.size(); ++start) {
    if (node_component_[start] != -1) continue;
    std::vector<int> stack = {static_cast<int>(start)};
    node_component_[start] = comp;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (auto [w, len] : adjacency_[v])
        if (node_component_[w] == -1) {
          node_component_[w] = comp;
          stack.push_back(w);
        }
    }
    ++comp;
  }
  piece_component_.resize(pieces_.size());
  for (size_t p = 0; p < pieces_.size(); ++p)
    piece_component_[p] = node_component_[canonical_[piece_offset_[p]]];

  // apex inventory and label table
  for (size_t p = 0; p < pieces_.size(); ++p) {
    if (pieces_[p].ac_end) continue;
    const std::string& label = pieces_[p].apex;
    if (std::find(labels_.begin(), labels_.end(), label) == labels_.end()) labels_.push_back(label);
    int node = canonical_[piece_offset_[p] + graphs_[p].apex];
    apex_nodes_.push_back({label_id(label), node, node_component_[node]});
  }

  for (const auto& apex : apex_nodes_) apex_dist_.push_back(dijkstra(apex.graph_node));

  const int nl = static_cast<int>(labels_.size());
  label_pair_.assign(nl, std::vector<double>(nl, kInf));
  for (int p = 0; p < nl; ++p) label_pair_[p][p] = 0.0;
  for (size_t i = 0; i < apex_nodes_.size(); ++i)
    for (size_t j = 0; j < apex_nodes_.size(); ++j) {
      if (apex_nodes_[i].component != apex_nodes_[j].component) continue;
      double d = apex_dist_[i][apex_nodes_[j].graph_node];
      auto& cell = label_pair_[apex_nodes_[i].label_id][apex_nodes_[j].label_id];
      cell = std::min(cell, d);
    }
  for (int k = 0; k < nl; ++k)
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        label_pair_[i][j] = std::min(label_pair_[i][j], label_pair_[i][k] + label_pair_[k][j]);
}

std::vector<double> QuotientSpace::dijkstra(int source) const {
  std::vector<double> dist(nodes_.size(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (auto [w, len] : adjacency_[v]) {
      double nd = d + len;
      if (nd < dist[w]) {
        dist[w] = nd;
        heap.push({nd, w});
      }
    }
  }
  return dist;
}

int QuotientSpace::label_id(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw std::invalid_argument("unknown apex label: " + label);
  return static_cast<int>(it - labels_.begin());
}

int QuotientSpace::snap(const QuotientPoint& x) const {
  if (x.piece < 0 || x.piece >= static_cast<int>(pieces_.size()))
    throw std::invalid_argument("quotient point piece index out of range");
  int local = graphs_[x.piece].nearest_node(x.point);
  return canonical_[piece_offset_[x.piece] + local];
}

std::vector<std::pair<int, double>> QuotientSpace::query_seeds(const QuotientPoint& x) const {
  if (x.piece < 0 || x.piece >= static_cast<int>(pieces_.size()))
    throw std::invalid_argument("quotient point piece index out of range");
  const ChartPiece& piece = pieces_[x.piece];
  const ChartGraph& g = graphs_[x.piece];
  MetricSpec spec = piece.ac_end ? MetricSpec{AcMetricSpec{piece.spec}} : MetricSpec{piece.spec};
  int offset = piece_offset_[x.piece];

  std::vector<std::pair<int, double>> out;
  // nearest boundary sample plus its ring neighbors
  int ny = static_cast<int>(g.samples.size());
  int best_iy = 0;
  double best_d = kInf;
  for (int i = 0; i < ny; ++i) {
    double d = boundary_distance(piece.spec.boundary, x.point.y, g.samples[i]);
    if (d < best_d) {
      best_d = d;
      best_iy = i;
    }
  }
  std::vector<int> ys = {best_iy};
  if (ny > 1) {
    ys.push_back((best_iy + 1) % ny);
    ys.push_back((best_iy + ny - 1) % ny);
  }
  // bracketing radial levels
  const auto& lv = g.radial_levels;
  int hi = static_cast<int>(std::lower_bound(lv.begin(), lv.end(), x.point.r) - lv.begin());
  std::vector<int> js;
  for (int j : {hi - 1, hi, hi + 1})
    if (j >= 0 && j < static_cast<int>(lv.size())) js.push_back(j);
  for (int iy : ys)
    for (int j : js) {
      int idx = g.node_index(iy, j);
      double w = segment_length(spec, x.point, g.nodes[idx]);
      if (std::isfinite(w)) out.push_back({canonical_[offset + idx], w});
    }
  // the radial segment into the apex has exact length r for every family
  if (!piece.ac_end && g.apex >= 0) out.push_back({canonical_[offset + g.apex], x.point.r});
  if (out.empty()) out.push_back({snap(x), 0.0});
  return out;
}

std::vector<double> QuotientSpace::dijkstra_seeded(
    const std::vector<std::pair<int, double>>& seeds) const {
  std::vector<double> dist(nodes_.size(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (auto [v, w] : seeds)
    if (w < dist[v]) {
      dist[v] = w;
      heap.push({w, v});
    }
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (auto [w, len] : adjacency_[v]) {
      double nd = d + len;
      if (nd < dist[w]) {
        dist[w] = nd;
        heap.push({nd, w});
      }
    }
  }
  return dist;
}

std::optional<double> QuotientSpace::exact_direct(const QuotientPoint& x,
                                                 const QuotientPoint& y) const {
  if (x.piece < 0 || y.piece < 0 || x.piece != y.piece) return std::nullopt;
  const ChartPiece& piece = pieces_[x.piece];
  // the inverted-coordinate geodesic may exit a truncated ac end, so the cone
  // law is only trusted on conic pieces
  if (piece.ac_end) return std::nullopt;
  if (!std::holds_alternative<ConstantFamily>(piece.spec.family)) return std::nullopt;
  return exact_simple_cone_distance(piece.spec, x.point, y.point);
}

std::vector<double> QuotientSpace::entry_distances(const QuotientPoint& x) const {
  const int nl = static_cast<int>(labels_.size());
  std::vector<double> entry(nl, kInf);
  if (x.piece < 0) {
    int p = label_id(x.apex);
    for (int q = 0; q < nl; ++q) entry[q] = label_pair_[p][q];
    return entry;
  }
  auto dist = dijkstra_seeded(query_seeds(x));
  for (size_t i = 0; i < apex_nodes_.size(); ++i)
    entry[apex_nodes_[i].label_id] =
        std::min(entry[apex_nodes_[i].label_id], dist[apex_nodes_[i].graph_node]);
  return entry;
}

double QuotientSpace::base_distance(const QuotientPoint& x, const QuotientPoint& y) const {
  if (x.piece < 0 || y.piece < 0)
    throw std::invalid_argument("base pseudo-distance is defined between chart points");
  auto dist = dijkstra_seeded(query_seeds(x));
  double best = kInf;
  for (auto [v, w] : query_seeds(y)) best = std::min(best, dist[v] + w);
  if (auto exact = exact_direct(x, y)) best = std::min(best, *exact);
  return best;
}

double QuotientSpace::quotient_distance(const QuotientPoint& x, const QuotientPoint& y) const {
  const int nl = static_cast<int>(labels_.size());
  double best = kInf;
  std::vector<double> entry_x, entry_y;
  if (x.piece >= 0 && y.piece >= 0) {
    auto dist = dijkstra_seeded(query_seeds(x));
    for (auto [v, w] : query_seeds(y)) best = std::min(best, dist[v] + w);
    if (auto exact = exact_direct(x, y)) best = std::min(best, *exact);
    entry_x.assign(nl, kInf);
    for (size_t i = 0; i < apex_nodes_.size(); ++i)
      entry_x[apex_nodes_[i].label_id] =
          std::min(entry_x[apex_nodes_[i].label_id], dist[apex_nodes_[i].graph_node]);
    entry_y = entry_distances(y);
  } else if (x.piece < 0 && y.piece < 0) {
    return label_pair_[label_id(x.apex)][label_id(y.apex)];
  } else {
    const QuotientPoint& apex = x.piece < 0 ? x : y;
    const QuotientPoint& chart = x.piece < 0 ? y : x;
    auto entry = entry_distances(chart);
    int p = label_id(apex.apex);
    double v = kInf;
    for (int q = 0; q < nl; ++q) v = std::min(v, entry[q] + label_pair_[q][p]);
    return v;
  }
  for (int p = 0; p < nl; ++p)
    for (int q = 0; q < nl; ++q)
      best = std::min(best, entry_x[p] + label_pair_[p][q] + entry_y[q]);
  return best;
}

double QuotientSpace::chain_bruteforce_distance(const QuotientPoint& x,
                                                const QuotientPoint& y) const {
  const int nl = static_cast<int>(labels_.size());
  // raw (pre-Floyd-Warshall) apex pair distances
  std::vector<std::vector<double>> raw(nl, std::vector<double>(nl, kInf));
  for (int p = 0; p < nl; ++p) raw[p][p] = 0.0;
  for (size_t i = 0; i < apex_nodes_.size(); ++i)
    for (size_t j = 0; j < apex_nodes_.size(); ++j) {
      if (apex_nodes_[i].component != apex_nodes_[j].component) continue;
      auto& cell = raw[apex_nodes_[i].label_id][apex_nodes_[j].label_id];
      cell = std::min(cell, apex_dist_[i][apex_nodes_[j].graph_node]);
    }

  std::vector<double> entry_x(nl, kInf), entry_y(nl, kInf);
  double direct = kInf;
  if (x.piece >= 0 && y.piece >= 0) {
    auto dist = dijkstra_seeded(query_seeds(x));
    for (auto [v, w] : query_seeds(y)) direct = std::min(direct, dist[v] + w);
    if (auto exact = exact_direct(x, y)) direct = std::min(direct, *exact);
    for (size_t i = 0; i < apex_nodes_.size(); ++i)
      entry_x[apex_nodes_[i].label_id] =
          std::min(entry_x[apex_nodes_[i].label_id], dist[apex_nodes_[i].graph_node]);
    auto disty = dijkstra_seeded(query_seeds(y));
    for (size_t i = 0; i < apex_nodes_.size(); ++i)
      entry_y[apex_nodes_[i].label_id] =
          std::min(entry_y[apex_nodes_[i].label_id], disty[apex_nodes_[i].graph_node]);
  } else {
    // apex arguments reduce to entry rows of the raw table
    if (x.piece < 0) entry_x = raw[label_id(x.apex)];
    else entry_x = entry_distances(x);
    if (y.piece < 0) entry_y = raw[label_id(y.apex)];
    else entry_y = entry_distances(y);
    if (x.piece < 0 && y.piece < 0) direct = kInf;
  }

  double best = direct;
  // enumerate all chains p_0 ... p_k of length k+1 <= |Sigma|
  std::vector<int> chain;
  std::function<void(double)> recurse = [&](double acc) {
    if (!chain.empty()) best = std::min(best, acc + entry_y[chain.back()]);
    if (static_cast<int>(chain.size()) >= nl) return;
    for (int p = 0; p < nl; ++p) {
      double step = chain.empty() ? entry_x[p] : raw[chain.back()][p];
      if (!std::isfinite(step)) continue;
      chain.push_back(p);
      recurse(acc + step);
      chain.pop_back();
    }
  };
  recurse(0.0);
  return best;
}

double QuotientSpace::distance_to_apex(const QuotientPoint& x, const std::string& label) const {
  return quotient_distance(x, QuotientPoint::at_apex(label));
}

CompletionSpec build_completion(const std::vector<ChartPiece>& pieces,
                                const std::vector<Seam>& seams) {
  bool has_end = false;
  std::vector<ChartPiece> completed = pieces;
  std::vector<std::string> infinity;
  for (auto& piece : completed) {
    if (!piece.ac_end) continue;
    has_end = true;
    if (piece.apex.empty())
      throw std::invalid_argument("ac end needs an apex label for its conic end");
    piece.ac_end = false;
    infinity.push_back(piece.apex);
  }
  if (!has_end) throw std::invalid_argument("completion needs at least one ac end");
  return {QuotientSpace(pieces, seams), QuotientSpace(completed, seams), infinity};
}

DualityReport inversion_duality_check(const ConicMetricSpec& spec,
                                      const std::vector<std::pair<ChartPoint, ChartPoint>>& pairs,
                                      const DistanceOptions& opts) {
  DualityReport report;
  report.min_ratio = kInf;
  report.max_ratio = -kInf;
  AcMetricSpec ac{spec};
  // the two metrics need distinct graphs, so a caller-supplied one would be
  // wrong for one of them; build a shared pair from the grid instead
  DistanceOptions conic_opts = opts, ac_opts = opts;
  conic_opts.graph = ac_opts.graph = nullptr;
  std::optional<ChartGraph> g0, ginf;
  if (opts.force_graph || !std::holds_alternative<ConstantFamily>(spec.family)) {
    g0.emplace(build_graph(MetricSpec{spec}, opts.grid));
    ginf.emplace(build_graph(MetricSpec{ac}, opts.grid));
    conic_opts.graph = &*g0;
    ac_opts.graph = &*ginf;
  }
  for (const auto& [x, x2] : pairs) {
    if (x.r <= 0.0 || x2.r <= 0.0)
      throw std::invalid_argument("inversion duality needs r, r' > 0");
    DualityRow row;
    row.x = x;
    row.x2 = x2;
    row.d0 = conic_distance(spec, x, x2, conic_opts).value;
    if (row.d0 < 1e-12) continue;  // x = x' excluded (0/0)
    row.dinf = ac_distance(ac, x, x2, ac_opts).value;
    row.weight = x.r * x2.r;
    row.ratio = row.weight * row.dinf / row.d0;
    report.min_ratio = std::min(report.min_ratio, row.ratio);
    report.max_ratio = std::max(report.max_ratio, row.ratio);
    report.rows.push_back(row);
  }
  return report;
}

DualityReport completion_duality_check(
    const CompletionSpec& completion,
    const std::vector<std::pair<QuotientPoint, QuotientPoint>>& samples) {
  DualityReport report;
  report.min_ratio = kInf;
  report.max_ratio = -kInf;
  auto r_bar = [&](const QuotientPoint& p) {
    double r = kInf;
    for (const auto& label : completion.infinity_labels)
      r = std::min(r, completion.completed.distance_to_apex(p, label));
    return r;
  };
  for (const auto& [x, y] : samples) {
    DualityRow row;
    row.x = x.point;
    row.x2 = y.point;
    row.d0 = completion.completed.quotient_distance(x, y);  // d-bar
    if (row.d0 < 1e-12) continue;
    row.dinf = completion.original.quotient_distance(x, y);  // d
    row.weight = r_bar(x) * r_bar(y);
    row.ratio = row.weight * row.dinf / row.d0;
    report.min_ratio = std::min(report.min_ratio, row.ratio);
    report.max_ratio = std::max(report.max_ratio, row.ratio);
    report.rows.push_back(row);
  }
  return report;
}

double inversion_gluing_mismatch(const ConicMetricSpec& spec, const ChartPoint& p,
                                 const Tangent& v) {
  if (p.r <= 0.0) throw std::domain_error("gluing identity is checked on the open cylinder");
  ConicMetricSpec unbounded = spec;
  unbounded.eta = std::numeric_limits<double>::infinity();
  double ac_norm = metric_norm_sq(MetricSpec{AcMetricSpec{unbounded}}, p, v);
  ChartPoint inv = conic_inversion(p);
  Tangent pushed{v.xi, -v.lambda / (p.r * p.r)};
  double pulled = metric_norm_sq(MetricSpec{unbounded}, inv, pushed);
  return std::abs(ac_norm - pulled);
}

}  // namespace conic
