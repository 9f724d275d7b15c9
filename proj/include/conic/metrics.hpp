#pragma once

#include "conic/boundary.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace conic {

// Singular metric tensors on cylinder charts Cyl(N, eta):
//     conic          dr^2 + r^2 s(r) g_N
//     asymptotically (dr^2 + r^2 s(r) g_N) / r^4           (r > 0 only)
// Only scalar-scaled families s(r) g_N are supported; fully y-dependent
// boundary tensors are out of scope (see README limitations).

struct ChartPoint {
  BoundaryPoint y;
  double r = 0.0;
};

struct Tangent {
  Eigen::VectorXd xi;  // tangent to N at y
  double lambda = 0.0;  // radial component
};

// Scale family r -> s(r) multiplying g_N; s(0) > 0 is the Riemannian-boundary
// condition, s must stay positive on [0, eta).
struct ConstantFamily {
  double scale = 1.0;
};

struct WarpedFamily {
  std::function<double(double)> f;  // warp factor, s(r) = f(r)^2
  std::string name;                 // serialization key for bundled warps
};

struct TabulatedFamily {
  std::vector<double> radii;   // strictly increasing from 0
  std::vector<double> scales;  // positive scale factors at the sample radii
};

using MetricFamily = std::variant<ConstantFamily, WarpedFamily, TabulatedFamily>;

double family_scale(const MetricFamily& family, double r);
void validate_family(const MetricFamily& family, double eta);

struct ConicMetricSpec {
  BoundaryGeometry boundary;
  double eta = 1.0;  // may be infinite
  MetricFamily family = ConstantFamily{};

  void validate() const;
  // d_N induced by g_boundary(0) = s(0) g_N
  double boundary_distance0(const BoundaryPoint& a, const BoundaryPoint& b) const;
};

struct AcMetricSpec {
  ConicMetricSpec base;  // the associated conic metric g0 = r^4 g_inf
};

struct CurvePolyline {
  std::vector<ChartPoint> points;
  std::vector<double> params;  // strictly increasing; defaults to 0..n-1

  void validate() const;
};

using MetricSpec = std::variant<ConicMetricSpec, AcMetricSpec>;

const ConicMetricSpec& base_spec(const MetricSpec& spec);
bool is_ac(const MetricSpec& spec);

// lambda^2 + r^2 s(r) |xi|^2_{g_N}, divided by r^4 for ac specs.
// Throws std::domain_error for ac evaluation at r = 0.
double metric_norm_sq(const MetricSpec& spec, const ChartPoint& p, const Tangent& v);

struct QuadratureOptions {
  double rel_tol = 1e-8;
  int max_levels = 20;
};

// Length of one straight chart segment (linear radius, minimizing boundary
// geodesic between the endpoints' y). Midpoint refinement with Richardson
// extrapolation.
double segment_length(const MetricSpec& spec, const ChartPoint& a, const ChartPoint& b,
                      const QuadratureOptions& opts = {});

// Same quadrature with the boundary displacement given directly as a g_N
// length; used by the curve refiner, which works in unwrapped coordinates.
double segment_length_scalar(const MetricSpec& spec, double d_geom, double ra, double rb,
                             const QuadratureOptions& opts = {});

double curve_length(const MetricSpec& spec, const CurvePolyline& curve,
                    const QuadratureOptions& opts = {});

// Ex-style blow-up charts of Euclidean space at the origin / at infinity;
// supported dimensions: 2 and 3.
ConicMetricSpec blowup_pullback_euclidean(int n);
AcMetricSpec infinity_pullback_euclidean(int n);

ConicMetricSpec associated_simple_metric(const ConicMetricSpec& spec);

// Empirical equivalence bracket [lo, hi] of norm ratios
// metric_norm_sq(spec) / metric_norm_sq(associated simple) on tangential
// vectors over r in [0, r_max].
std::pair<double, double> norm_ratio_bracket(const ConicMetricSpec& spec, double r_max,
                                             int samples = 256);

}  // namespace conic
