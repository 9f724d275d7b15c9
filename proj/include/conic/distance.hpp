#pragma once

#include "conic/metrics.hpp"

#include <optional>
#include <vector>

namespace conic {

struct GridDiscretization {
  int n_r = 64;
  enum class Spacing { Uniform, Geometric } spacing = Spacing::Uniform;
  double r_min = 0.0;  // ac grids need r_min > 0
  double r_max = 1.0;
  int n_y = 64;
  bool include_apex = true;

  std::vector<double> levels() const;  // strictly increasing, in (r_min, r_max]
  void validate(const MetricSpec& spec) const;
};

// Weighted graph over the grid nodes (y_i, r_j), plus an optional apex node
// collapsing the whole boundary. Immutable once built; distance queries are
// safe to run concurrently.
struct ChartGraph {
  MetricSpec spec;
  GridDiscretization grid;
  std::vector<double> radial_levels;
  std::vector<BoundaryPoint> samples;
  bool ring = false;  // cyclic 1-d boundary sample set
  int apex = -1;
  std::vector<ChartPoint> nodes;
  std::vector<std::vector<std::pair<int, double>>> adjacency;

  int node_index(int iy, int jr) const;
  int nearest_node(const ChartPoint& p) const;
};

ChartGraph build_graph(const MetricSpec& spec, const GridDiscretization& grid);

struct DistanceResult {
  double value = 0.0;
  CurvePolyline path;
  enum class Method { Exact, Graph, Refined } method = Method::Exact;
  double residual = 0.0;       // refinement termination residual / snap estimate
  int domain_projections = 0;  // refiner vertices projected back into the domain
};

std::vector<double> graph_all_distances(const ChartGraph& graph, int source,
                                        std::vector<int>* parent = nullptr);
DistanceResult graph_distance(const ChartGraph& graph, const ChartPoint& x,
                              const ChartPoint& x2);

// Cone law of cosines for simple (constant-family) metrics:
//   sqrt(r^2 + r'^2 - 2 r r' cos(min(d_N, pi)))
// The pi cap routes the minimizer through the apex, giving r + r'.
double exact_simple_cone_distance(const ConicMetricSpec& spec, const ChartPoint& x,
                                  const ChartPoint& x2);

// Simple-metric sandwich: lower = |r-r'|/2 + min(r,r') d_N / 2,
// upper = |r-r'| + min(r,r') d_N.
std::pair<double, double> conic_sandwich_bounds(const ChartPoint& x, const ChartPoint& x2,
                                                double d_N);

// e(x,x') = |1/r - 1/r'| + min(1/r, 1/r') d_N ; throws at r = 0.
double ac_e_function(const ChartPoint& x, const ChartPoint& x2, double d_N);

struct RefineOptions {
  double tol = 1e-7;
  int max_iters = 500;
};

// Coordinate descent on interior vertices with endpoints pinned. Supported on
// charts with a 1-d smooth boundary (circle or one-period torus); other
// charts return the seed unchanged. Never increases length.
DistanceResult refine_geodesic(const MetricSpec& spec, const CurvePolyline& seed,
                               const RefineOptions& opts = {});

struct DistanceOptions {
  GridDiscretization grid;
  RefineOptions refine;
  bool force_graph = false;        // skip the exact dispatch, for cross-checks
  const ChartGraph* graph = nullptr;  // reuse a prebuilt graph
  int exact_path_points = 65;
};

DistanceResult conic_distance(const ConicMetricSpec& spec, const ChartPoint& x,
                              const ChartPoint& x2, const DistanceOptions& opts = {});
DistanceResult ac_distance(const AcMetricSpec& spec, const ChartPoint& x,
                           const ChartPoint& x2, const DistanceOptions& opts = {});

// Planar coordinate chart with a general (possibly degenerate) 2x2 metric
// field; used for metrics with cross terms that the cylinder machinery does
// not represent, e.g. the log-spiral tensor in polar coordinates.
struct PlanarChart {
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> metric;
  Eigen::Vector2d lo{-1e300, -1e300};
  Eigen::Vector2d hi{1e300, 1e300};
};

double planar_curve_length(const PlanarChart& chart,
                           const std::vector<Eigen::Vector2d>& pts,
                           const QuadratureOptions& opts = {});

// Coarse-to-fine variational shortening: pattern descent on interior
// vertices, inserting midpoints between rounds. Endpoints stay pinned.
std::vector<Eigen::Vector2d> refine_planar_geodesic(const PlanarChart& chart,
                                                    std::vector<Eigen::Vector2d> seed,
                                                    const RefineOptions& opts = {},
                                                    int subdivide_rounds = 4);

}  // namespace conic
