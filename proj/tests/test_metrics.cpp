#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conic/logspiral.hpp"
#include "conic/metrics.hpp"

#include <cmath>
#include <random>

using namespace conic;

namespace {

double uniform01(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

ConicMetricSpec unit_cone() {
  ConicMetricSpec spec;
  spec.boundary = Circle{2 * M_PI};
  spec.eta = std::numeric_limits<double>::infinity();
  return spec;
}

}  // namespace

TEST_CASE("pointwise norms follow the collar form") {
  ConicMetricSpec spec = unit_cone();
  ChartPoint p{make_circle_point(1.0), 0.5};
  Tangent radial{Eigen::VectorXd::Constant(1, 0.0), 3.0};
  Tangent tangential{Eigen::VectorXd::Constant(1, 2.0), 0.0};
  CHECK(metric_norm_sq(MetricSpec{spec}, p, radial) == doctest::Approx(9.0));
  CHECK(metric_norm_sq(MetricSpec{spec}, p, tangential) == doctest::Approx(0.25 * 4.0));
  // tangential directions collapse at the apex
  ChartPoint apex{make_circle_point(0.0), 0.0};
  CHECK(metric_norm_sq(MetricSpec{spec}, apex, tangential) == doctest::Approx(0.0));
  CHECK(metric_norm_sq(MetricSpec{spec}, apex, radial) == doctest::Approx(9.0));
}

TEST_CASE("inverted-coordinate norms scale by the fourth power") {
  ConicMetricSpec spec = unit_cone();
  AcMetricSpec ac{spec};
  ChartPoint p{make_circle_point(0.3), 0.5};
  Tangent v{Eigen::VectorXd::Constant(1, 1.0), 1.0};
  double conic = metric_norm_sq(MetricSpec{spec}, p, v);
  double inverted = metric_norm_sq(MetricSpec{ac}, p, v);
  CHECK(inverted == doctest::Approx(conic / std::pow(0.5, 4)));
  CHECK(inverted == doctest::Approx((1.0 + 0.25) * 16.0));
  CHECK_THROWS_AS(metric_norm_sq(MetricSpec{ac}, ChartPoint{make_circle_point(0.0), 0.0}, v),
                  std::domain_error);
}

TEST_CASE("scale families evaluate and validate") {
  CHECK(family_scale(ConstantFamily{2.5}, 0.7) == doctest::Approx(2.5));
  WarpedFamily w;
  w.f = [](double r) { return 1.0 + r * r; };
  CHECK(family_scale(w, 0.5) == doctest::Approx(1.5625));

  TabulatedFamily t;
  t.radii = {0.0, 0.5, 1.0};
  t.scales = {1.0, 2.0, 1.5};
  CHECK(family_scale(t, 0.0) == doctest::Approx(1.0));
  CHECK(family_scale(t, 0.5) == doctest::Approx(2.0));
  CHECK(family_scale(t, 1.0) == doctest::Approx(1.5));
  // monotone interpolation cannot overshoot the data range
  for (int i = 0; i <= 100; ++i) {
    double s = family_scale(t, i / 100.0);
    CHECK(s >= 1.0 - 1e-12);
    CHECK(s <= 2.0 + 1e-12);
  }

  TabulatedFamily bad;
  bad.radii = {0.0, 1.0};
  bad.scales = {1.0, -1.0};
  CHECK_THROWS_AS(validate_family(bad, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(validate_family(ConstantFamily{0.0}, 1.0), std::invalid_argument);
}

TEST_CASE("radial curves have Euclidean length in every family") {
  for (MetricFamily family :
       {MetricFamily{ConstantFamily{3.0}},
        MetricFamily{WarpedFamily{[](double r) { return 1.0 + r; }, "one_plus_r"}}}) {
    ConicMetricSpec spec = unit_cone();
    spec.family = family;
    CurvePolyline radial;
    radial.points = {{make_circle_point(1.0), 0.9}, {make_circle_point(1.0), 0.0}};
    CHECK(curve_length(MetricSpec{spec}, radial) == doctest::Approx(0.9).epsilon(1e-9));
  }
}

TEST_CASE("boundary arcs scale with the radius") {
  ConicMetricSpec spec = unit_cone();
  // unit-radius full loop has length 2 pi
  CurvePolyline loop;
  for (int i = 0; i <= 64; ++i)
    loop.points.push_back({make_circle_point(2 * M_PI * i / 64.0), 1.0});
  CHECK(curve_length(MetricSpec{spec}, loop) == doctest::Approx(2 * M_PI).epsilon(1e-6));
  // an arc at r = 0 has length zero
  CurvePolyline flat;
  flat.points = {{make_circle_point(0.0), 0.0}, {make_circle_point(2.0), 0.0}};
  CHECK(curve_length(MetricSpec{spec}, flat) == doctest::Approx(0.0));
}

TEST_CASE("segment quadrature matches the closed-form cone chord") {
  // for the unit cone the development is the Euclidean plane, so a straight
  // chart segment has a computable length
  ConicMetricSpec spec = unit_cone();
  ChartPoint a{make_circle_point(0.0), 1.0};
  ChartPoint b{make_circle_point(1.0), 0.6};
  double len = segment_length(MetricSpec{spec}, a, b);
  // oracle: numerically integrate sqrt(r'(t)^2 + r(t)^2 theta'(t)^2) densely
  double oracle = 0;
  int n = 200000;
  for (int k = 0; k < n; ++k) {
    double t = (k + 0.5) / n;
    double r = 1.0 + t * (0.6 - 1.0);
    oracle += std::sqrt(0.16 + r * r) / n;
  }
  CHECK(len == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("curve length is reparametrization invariant") {
  ConicMetricSpec spec = unit_cone();
  spec.family = WarpedFamily{[](double r) { return 1.0 + r; }, "one_plus_r"};
  CurvePolyline coarse;
  coarse.points = {{make_circle_point(0.2), 0.8}, {make_circle_point(1.4), 0.3}};
  // inserting collinear chart vertices must not change the length
  CurvePolyline fine;
  for (int i = 0; i <= 8; ++i) {
    double t = i / 8.0;
    fine.points.push_back({make_circle_point(0.2 + t * 1.2), 0.8 + t * (0.3 - 0.8)});
  }
  CHECK(curve_length(MetricSpec{spec}, fine) ==
        doctest::Approx(curve_length(MetricSpec{spec}, coarse)).epsilon(1e-6));
}

TEST_CASE("conformal relation between the conic and inverted readings") {
  std::mt19937_64 rng(5);
  ConicMetricSpec spec = unit_cone();
  spec.family = WarpedFamily{[](double r) { return std::exp(-r * r); }, "gaussian"};
  AcMetricSpec ac{spec};
  for (int i = 0; i < 100; ++i) {
    ChartPoint p{make_circle_point(2 * M_PI * uniform01(rng)), 0.05 + 2.0 * uniform01(rng)};
    Tangent v{Eigen::VectorXd::Constant(1, uniform01(rng) - 0.5), uniform01(rng) - 0.5};
    double conic = metric_norm_sq(MetricSpec{spec}, p, v);
    double inverted = metric_norm_sq(MetricSpec{ac}, p, v);
    CHECK(inverted * std::pow(p.r, 4) == doctest::Approx(conic).epsilon(1e-12));
  }
}

TEST_CASE("associated simple metric freezes the family at the boundary") {
  ConicMetricSpec spec = unit_cone();
  spec.family = WarpedFamily{[](double r) { return 2.0 + r; }, "shifted"};
  ConicMetricSpec simple = associated_simple_metric(spec);
  REQUIRE(std::holds_alternative<ConstantFamily>(simple.family));
  CHECK(std::get<ConstantFamily>(simple.family).scale == doctest::Approx(4.0));

  auto [lo, hi] = norm_ratio_bracket(spec, 0.5);
  CHECK(lo >= 1.0 - 1e-9);                       // s is increasing here
  CHECK(hi == doctest::Approx(6.25 / 4.0));      // s(0.5)/s(0)
}

TEST_CASE("blow-up charts of flat space") {
  ConicMetricSpec two = blowup_pullback_euclidean(2);
  REQUIRE(std::holds_alternative<Circle>(two.boundary));
  CHECK(std::get<Circle>(two.boundary).circumference == doctest::Approx(2 * M_PI));
  ConicMetricSpec three = blowup_pullback_euclidean(3);
  REQUIRE(std::holds_alternative<RoundSphere>(three.boundary));
  CHECK(std::get<RoundSphere>(three.boundary).dimension == 2);
  CHECK_THROWS_AS(blowup_pullback_euclidean(7), std::invalid_argument);
  AcMetricSpec inf2 = infinity_pullback_euclidean(2);
  CHECK(std::get<Circle>(inf2.base.boundary).circumference == doctest::Approx(2 * M_PI));
}

TEST_CASE("spiral resolution hits the expected plane points") {
  LogSpiralExample ex = logspiral_example();
  Eigen::Vector2d p = ex.phi.forward(0.0, 1.0);
  CHECK(p.x() == doctest::Approx(1.0));
  CHECK(p.y() == doctest::Approx(0.0).epsilon(1e-12));
  // radius is preserved
  Eigen::Vector2d q = ex.phi.forward(1.3, 0.25);
  CHECK(q.norm() == doctest::Approx(0.25));
  // inverse recovers chart coordinates on the smooth part
  auto [theta, r] = ex.phi.inverse(q);
  CHECK(r == doctest::Approx(0.25));
  CHECK(std::cos(theta - 1.3) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ex.phi.inverse(Eigen::Vector2d(0, 0)), std::domain_error);
}

TEST_CASE("spiral metric values in polar coordinates") {
  LogSpiralExample ex = logspiral_example();
  Eigen::Matrix2d g = ex.polar_metric(1.0);
  // basis (dtheta, dr): [r^2, r; r, 2]
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(0, 1) == doctest::Approx(1.0));
  CHECK(g(1, 1) == doctest::Approx(2.0));
  // norm^2 of dtheta + dr at r = 1: 1 + 2*1 + 2 = 5
  Eigen::Vector2d v(1.0, 1.0);
  CHECK(v.dot(g * v) == doctest::Approx(5.0));
  // Cartesian and polar readings agree away from the axis
  Eigen::Vector2d pt(0.6, 0.8);
  Eigen::Matrix2d h = ex.cartesian_metric(pt);
  // push (dtheta, dr) at (theta=atan2(.8,.6), r=1) to Cartesian
  double th = std::atan2(0.8, 0.6);
  Eigen::Matrix2d jac;
  jac << -std::sin(th), std::cos(th), std::cos(th), std::sin(th);  // d(x,y)/d(theta,r) at r=1
  Eigen::Vector2d w = jac * v;
  CHECK(w.dot(h * w) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("spiral resolution pulls the metric back to the cone") {
  LogSpiralExample ex = logspiral_example();
  std::mt19937_64 rng(77);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    double theta = 2 * M_PI * uniform01(rng);
    double r = 0.01 + 3.0 * uniform01(rng);
    worst = std::max(worst, ex.pullback_residual(theta, r));
    CHECK(ex.pullback_norm_sq(theta, r, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ex.pullback_norm_sq(theta, r, 1.0, 0.0) == doctest::Approx(r * r).epsilon(1e-9));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("polyline validation rejects bad parameters") {
  CurvePolyline c;
  c.points = {{make_circle_point(0.0), 0.1}, {make_circle_point(1.0), 0.2}};
  c.params = {0.0, 0.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
