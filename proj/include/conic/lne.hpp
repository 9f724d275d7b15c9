#pragma once

#include "conic/distance.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace conic {

// Parametric sub-manifold of a cylinder chart, supplied already in chart
// (strict-transform) coordinates. Parameter domain is an interval or a
// product of two intervals; a radial-like parameter may reach r = 0.
struct ParamSubmanifold {
  std::string name;
  int dim = 1;
  Eigen::VectorXd lo, hi;
  std::function<ChartPoint(const Eigen::VectorXd&)> embed;
  std::vector<int> grid_sizes;  // samples per parameter; defaults applied when empty
};

struct PSubmanifoldDiagnostics {
  bool pass = false;
  int boundary_points = 0;          // sampled points on the r = 0 trace
  double min_radial_component = 0;  // worst normalized radial tangent component
  Eigen::VectorXd worst_param;
  std::string note;
};

// Transversality to {r = 0}: at every sampled boundary-trace point the
// tangent space must contain a direction whose normalized radial component
// is at least tol. Ring-boundary charts only (signed boundary coordinate).
PSubmanifoldDiagnostics check_p_submanifold(const ParamSubmanifold& X,
                                            const ConicMetricSpec& spec, double tol);

using AmbientDistance = std::function<double(const ChartPoint&, const ChartPoint&)>;

// Restriction of the ambient pseudo-distance to X.
double outer_distance(const ParamSubmanifold& X, const ConicMetricSpec& spec,
                      const Eigen::VectorXd& p, const Eigen::VectorXd& p2,
                      const DistanceOptions& opts = {});

// Shortest paths within X: graph over the parameter grid with ambient-length
// edge weights, then constrained refinement with vertices moving in
// parameter space. Immutable after construction.
class InnerMetric {
 public:
  InnerMetric(ParamSubmanifold X, ConicMetricSpec spec);

  double distance(const Eigen::VectorXd& p, const Eigen::VectorXd& p2) const;
  const ParamSubmanifold& submanifold() const { return X_; }
  const ConicMetricSpec& chart() const { return spec_; }

  int node_count() const { return static_cast<int>(params_.size()); }
  const Eigen::VectorXd& node_param(int i) const { return params_[i]; }
  double node_radius(int i) const { return radii_[i]; }
  int component(int i) const { return component_[i]; }
  int nearest(const Eigen::VectorXd& p) const;

 private:
  double edge_weight(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

  ParamSubmanifold X_;
  ConicMetricSpec spec_;
  std::vector<Eigen::VectorXd> params_;
  std::vector<double> radii_;
  std::vector<int> component_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

struct LneScanOptions {
  int rungs = 8;
  double top_scale = 0.5;  // epsilon ladder: top_scale / 2^k, k = 0..rungs-1
  int pairs_per_scale = 36;
  double growth_tol = 1.5;
  std::uint64_t seed = 1;
  double ratio_tolerance = 5e-3;  // slack on inner >= outer
};

struct LneScaleRecord {
  double scale = 0.0;
  int pairs = 0;
  bool skipped = false;
  double sup = 0.0;
  Eigen::VectorXd witness_a, witness_b;
};

struct LneReport {
  std::string name;
  std::vector<LneScaleRecord> ladder;
  double sup = 0.0;
  Eigen::VectorXd witness_a, witness_b;
  enum class Verdict { Bounded, Diverging } verdict = Verdict::Bounded;
  double min_inner_minus_outer = 0.0;  // most negative inner-outer gap seen
};

// Samples stratified pairs in X with r <= epsilon for each rung of the scale
// ladder and records the running supremum of inner/outer. DIVERGING means the
// supremum keeps growing by >= growth_tol across a window of at least three
// consecutive rungs.
LneReport lne_ratio_scan(const InnerMetric& inner, const LneScanOptions& opts,
                         const AmbientDistance& ambient = {});

struct CylinderLneReport {
  LneReport scan;
  double boundary_constant = 0.0;  // LNE constant of Y inside N
  double predicted_cap = 0.0;      // 2 * max(1, L)
  bool within_prediction = false;
};

// Cylinder persistence check: Y x [0, eps] cylinders over an LNE subset Y of the
// boundary circle stay LNE with the predicted constant.
CylinderLneReport cylinder_lne_check(double arc_start, double arc_end, double boundary_constant,
                                     const ConicMetricSpec& spec, const LneScanOptions& opts);

}  // namespace conic
