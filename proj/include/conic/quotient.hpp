#pragma once

#include "conic/distance.hpp"

#include <map>
#include <string>
#include <vector>

namespace conic {

// (y, r) -> (y, 1/r); involutive, throws at r = 0.
ChartPoint conic_inversion(const ChartPoint& x);

// One cylinder chart of a quotient space. The r = 0 boundary component
// collapses to the apex label; ac ends are charts whose r -> 0 face is the
// boundary at infinity (metric r^-4 g0, no reachable apex in the original
// space, a conic apex after completion).
struct ChartPiece {
  std::string name;
  ConicMetricSpec spec;
  GridDiscretization grid;
  std::string apex;     // label in Sigma
  bool ac_end = false;
};

// Isometric identification of the r = r_max circles of two pieces. Ring
// boundaries only; the offset shifts piece_b's boundary coordinate and must
// align with the sample grid.
struct Seam {
  int piece_a = 0;
  int piece_b = 0;
  double offset = 0.0;
};

struct QuotientPoint {
  int piece = -1;  // -1: the point is the apex with the given label
  ChartPoint point;
  std::string apex;

  static QuotientPoint chart(int piece, ChartPoint p) { return {piece, std::move(p), {}}; }
  static QuotientPoint at_apex(std::string label) { return {-1, {}, std::move(label)}; }
};

// Quotient singular space: seam-glued chart pieces with boundary components
// collapsed by labels. Carries the chain distance
//   d_sigma(x,y) = min( d_c(x,y), min over apex chains of
//                       d_c(x, p_0) + sum d_c(p_{j-1}, p_j) + d_c(p_k, y) )
// resolved by all-pairs shortest path over the apex set. Immutable after
// construction; queries are safe to run concurrently.
class QuotientSpace {
 public:
  QuotientSpace(std::vector<ChartPiece> pieces, std::vector<Seam> seams = {});

  const std::vector<ChartPiece>& pieces() const { return pieces_; }
  const std::vector<std::string>& apex_labels() const { return labels_; }

  double quotient_distance(const QuotientPoint& x, const QuotientPoint& y) const;

  // Exhaustive chain enumeration over Sigma; test oracle for the shortest
  // path formulation.
  double chain_bruteforce_distance(const QuotientPoint& x, const QuotientPoint& y) const;

  double distance_to_apex(const QuotientPoint& x, const std::string& label) const;

  // Base pseudo-distance d_c (infinite across seam-disconnected groups).
  double base_distance(const QuotientPoint& x, const QuotientPoint& y) const;

 private:
  struct ApexNode {
    int label_id;
    int graph_node;  // index into the merged graph
    int component;
  };

  int snap(const QuotientPoint& x) const;
  int label_id(const std::string& label) const;
  // (merged node, exact chart-segment length) pairs anchoring a query point
  // into the graph; includes the piece's apex with the exact radial length
  std::vector<std::pair<int, double>> query_seeds(const QuotientPoint& x) const;
  std::vector<double> dijkstra_seeded(const std::vector<std::pair<int, double>>& seeds) const;
  // closed-form within-piece distance where the cone law applies
  std::optional<double> exact_direct(const QuotientPoint& x, const QuotientPoint& y) const;
  std::vector<double> entry_distances(const QuotientPoint& x) const;

  std::vector<ChartPiece> pieces_;
  std::vector<ChartGraph> graphs_;
  std::vector<Seam> seams_;
  std::vector<std::string> labels_;
  std::vector<ApexNode> apex_nodes_;
  std::vector<int> piece_component_;
  std::vector<int> piece_offset_;
  std::vector<int> canonical_;  // raw node id -> merged node id
  std::vector<ChartPoint> nodes_;
  std::vector<int> node_piece_;
  std::vector<int> node_component_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
  std::vector<std::vector<double>> apex_dist_;   // per apex node: merged-graph distances
  std::vector<std::vector<double>> label_pair_;  // Floyd-Warshall over labels

  std::vector<double> dijkstra(int source) const;
};

// Conic completion: ac ends re-read through the conic inversion as conic
// charts whose apexes form the set of conic ends.
struct CompletionSpec {
  QuotientSpace original;   // d: ac metric on the ends
  QuotientSpace completed;  // d-bar: conic metric on the ends, apexes added
  std::vector<std::string> infinity_labels;
};

CompletionSpec build_completion(const std::vector<ChartPiece>& pieces,
                                const std::vector<Seam>& seams = {});

struct DualityRow {
  ChartPoint x, x2;
  double d0 = 0.0;      // conic / completed distance
  double dinf = 0.0;    // ac / original distance
  double weight = 0.0;  // r * r'
  double ratio = 0.0;
};

struct DualityReport {
  std::vector<DualityRow> rows;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

// Bracket of r r' d_inf / d_0 over the given pairs, with d_0
// from the conic metric and d_inf from the ac metric on the same chart.
DualityReport inversion_duality_check(const ConicMetricSpec& spec,
                                      const std::vector<std::pair<ChartPoint, ChartPoint>>& pairs,
                                      const DistanceOptions& opts = {});

// Bracket of r r' d / d-bar with r = d-bar(x, infinity set).
DualityReport completion_duality_check(const CompletionSpec& completion,
                                       const std::vector<std::pair<QuotientPoint, QuotientPoint>>& samples);

// Pointwise mismatch between the ac norm r^-4 g0 and the inversion pullback
// of the conic metric in the inverted coordinate; zero for inversion-symmetric
// families.
double inversion_gluing_mismatch(const ConicMetricSpec& spec, const ChartPoint& p,
                                 const Tangent& v);

}  // namespace conic
