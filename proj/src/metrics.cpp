#include "conic/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace conic {

namespace {

// Fritsch-Carlson monotone cubic interpolation; preserves positivity of the
// tabulated scale factors.
double pchip_eval(const std::vector<double>& x, const std::vector<double>& y, double t) {
  const int n = static_cast<int>(x.size());
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  int i = 0;
  while (i + 2 < n && x[i + 1] <= t) ++i;

  auto slope = [&](int k) { return (y[k + 1] - y[k]) / (x[k + 1] - x[k]); };
  auto deriv = [&](int k) -> double {
    if (k == 0) return slope(0);
    if (k == n - 1) return slope(n - 2);
    double d0 = slope(k - 1), d1 = slope(k);
    if (d0 * d1 <= 0.0) return 0.0;
    double w0 = 2.0 * (x[k + 1] - x[k]) + (x[k] - x[k - 1]);
    double w1 = (x[k + 1] - x[k]) + 2.0 * (x[k] - x[k - 1]);
    return (w0 + w1) / (w0 / d0 + w1 / d1);
  };

  double h = x[i + 1] - x[i];
  double s = (t - x[i]) / h;
  double m0 = deriv(i) * h, m1 = deriv(i + 1) * h;
  double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y[i] + (s3 - 2 * s2 + s) * m0 +
         (-2 * s3 + 3 * s2) * y[i + 1] + (s3 - s2) * m1;
}

}  // namespace

double family_scale(const MetricFamily& family, double r) {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantFamily>) {
          return f.scale;
        } else if constexpr (std::is_same_v<T, WarpedFamily>) {
          double v = f.f(r);
          return v * v;
        } else {
          return pchip_eval(f.radii, f.scales, r);
        }
      },
      family);
}

void validate_family(const MetricFamily& family, double eta) {
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantFamily>) {
          if (!(f.scale > 0.0)) throw std::invalid_argument("constant family scale must be positive");
        } else if constexpr (std::is_same_v<T, WarpedFamily>) {
          if (!f.f) throw std::invalid_argument("warped family needs a warp function");
          double top = std::isfinite(eta) ? eta : 8.0;
          for (int k = 0; k < 64; ++k) {
            double r = top * k / 64.0;
            if (!(f.f(r) > 0.0)) throw std::invalid_argument("warp factor must stay positive");
          }
        } else {
          if (f.radii.size() < 2 || f.radii.size() != f.scales.size())
            throw std::invalid_argument("tabulated family needs matching radii/scales, at least two");
          if (f.radii.front() != 0.0) throw std::invalid_argument("tabulated radii must start at 0");
          for (size_t k = 0; k < f.radii.size(); ++k) {
            if (k > 0 && !(f.radii[k] > f.radii[k - 1]))
              throw std::invalid_argument("tabulated radii must be strictly increasing");
            if (!(f.scales[k] > 0.0)) throw std::invalid_argument("tabulated scales must be positive");
          }
        }
      },
      family);
}

void ConicMetricSpec::validate() const {
  validate_geometry(boundary);
  if (!(eta > 0.0)) throw std::invalid_argument("cylinder height must be positive");
  validate_family(family, eta);
  if (!(family_scale(family, 0.0) > 0.0))
    throw std::invalid_argument("boundary metric at r=0 must be positive-definite");
}

double ConicMetricSpec::boundary_distance0(const BoundaryPoint& a, const BoundaryPoint& b) const {
  return std::sqrt(family_scale(family, 0.0)) * boundary_distance(boundary, a, b);
}

void CurvePolyline::validate() const {
  if (points.size() < 2) throw std::invalid_argument("polyline needs at least two points");
  if (!params.empty()) {
    if (params.size() != points.size())
      throw std::invalid_argument("polyline parameter count mismatch");
    for (size_t k = 1; k < params.size(); ++k)
      if (!(params[k] > params[k - 1]))
        throw std::invalid_argument("polyline parameters must be strictly increasing");
  }
}

const ConicMetricSpec& base_spec(const MetricSpec& spec) {
  if (const auto* c = std::get_if<ConicMetricSpec>(&spec)) return *c;
  return std::get<AcMetricSpec>(spec).base;
}

bool is_ac(const MetricSpec& spec) { return std::holds_alternative<AcMetricSpec>(spec); }

double metric_norm_sq(const MetricSpec& spec, const ChartPoint& p, const Tangent& v) {
  const ConicMetricSpec& base = base_spec(spec);
  if (p.r < 0.0) throw std::domain_error("radial coordinate must be nonnegative");
  if (is_ac(spec) && p.r == 0.0)
    throw std::domain_error("asymptotically conic metric is singular at r = 0");
  double tang = p.r > 0.0 ? p.r * p.r * family_scale(base.family, p.r) *
                                boundary_tangent_norm_sq(base.boundary, p.y, v.xi)
                          : 0.0;
  double n = v.lambda * v.lambda + tang;
  if (is_ac(spec)) n /= p.r * p.r * p.r * p.r;
  return n;
}

double segment_length(const MetricSpec& spec, const ChartPoint& a, const ChartPoint& b,
                      const QuadratureOptions& opts) {
  const ConicMetricSpec& base = base_spec(spec);
  double d_geom = boundary_distance(base.boundary, a.y, b.y);
  return segment_length_scalar(spec, d_geom, a.r, b.r, opts);
}

double segment_length_scalar(const MetricSpec& spec, double d_geom, double ra, double rb,
                             const QuadratureOptions& opts) {
  const ConicMetricSpec& base = base_spec(spec);
  const bool ac = is_ac(spec);
  ChartPoint a{{}, ra}, b{{}, rb};
  if (a.r < 0.0 || b.r < 0.0) throw std::domain_error("curve leaves the chart domain (r < 0)");
  if (std::isfinite(base.eta) && (a.r > base.eta || b.r > base.eta))
    throw std::domain_error("curve leaves the chart domain (r > eta)");
  if (ac && (a.r == 0.0 || b.r == 0.0))
    throw std::domain_error("asymptotically conic curve touches r = 0");

  if (d_geom < 1e-15) {
    // pure radial segment: closed form in both regimes
    return ac ? std::abs(1.0 / a.r - 1.0 / b.r) : std::abs(a.r - b.r);
  }

  // The straight segment follows the minimizing boundary geodesic at unit
  // parameter speed, so each of the `pieces` subsegments advances d_geom/pieces
  // along N and (b.r - a.r)/pieces radially.
  auto chord_sum = [&](int pieces) {
    double sum = 0.0;
    double dr = (b.r - a.r) / pieces;
    double dn = d_geom / pieces;
    for (int k = 0; k < pieces; ++k) {
      double rm = a.r + (k + 0.5) * dr;
      double tang2 = rm * rm * family_scale(base.family, rm) * dn * dn;
      double piece = std::sqrt(dr * dr + tang2);
      if (ac) piece /= rm * rm;
      sum += piece;
    }
    return sum;
  };

  int pieces = 1;
  double coarse = chord_sum(pieces);
  double extr_prev = coarse;
  for (int level = 1; level <= opts.max_levels; ++level) {
    pieces *= 2;
    double fine = chord_sum(pieces);
    double extr = (4.0 * fine - coarse) / 3.0;  // chord error is O(h^2)
    if (std::abs(extr - extr_prev) <= opts.rel_tol * std::max(1e-300, std::abs(extr)))
      return extr;
    coarse = fine;
    extr_prev = extr;
  }
  return extr_prev;
}

double curve_length(const MetricSpec& spec, const CurvePolyline& curve,
                    const QuadratureOptions& opts) {
  curve.validate();
  double total = 0.0;
  for (size_t k = 0; k + 1 < curve.points.size(); ++k)
    total += segment_length(spec, curve.points[k], curve.points[k + 1], opts);
  return total;
}

ConicMetricSpec blowup_pullback_euclidean(int n) {
  if (n != 2 && n != 3)
    throw std::invalid_argument("blow-up charts are exposed for dimensions 2 and 3 only");
  ConicMetricSpec spec;
  if (n == 2)
    spec.boundary = Circle{2.0 * M_PI};
  else
    spec.boundary = RoundSphere{2, 1.0};
  spec.eta = std::numeric_limits<double>::infinity();
  spec.family = ConstantFamily{1.0};
  return spec;
}

AcMetricSpec infinity_pullback_euclidean(int n) { return {blowup_pullback_euclidean(n)}; }

ConicMetricSpec associated_simple_metric(const ConicMetricSpec& spec) {
  ConicMetricSpec simple = spec;
  simple.family = ConstantFamily{family_scale(spec.family, 0.0)};
  return simple;
}

std::pair<double, double> norm_ratio_bracket(const ConicMetricSpec& spec, double r_max,
                                             int samples) {
  double s0 = family_scale(spec.family, 0.0);
  double lo = 1.0, hi = 1.0;  // radial directions always give ratio 1
  for (int k = 0; k <= samples; ++k) {
    double r = r_max * k / samples;
    double ratio = family_scale(spec.family, r) / s0;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return {lo, hi};
}

}  // namespace conic
