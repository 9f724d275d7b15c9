#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conic/lne.hpp"

#include <cmath>

using namespace conic;

namespace {

ConicMetricSpec unit_cone() {
  ConicMetricSpec spec;
  spec.boundary = Circle{2 * M_PI};
  spec.eta = std::numeric_limits<double>::infinity();
  return spec;
}

ParamSubmanifold radial_ray(double theta, double r_max) {
  ParamSubmanifold X;
  X.name = "ray";
  X.dim = 1;
  X.lo = Eigen::VectorXd::Constant(1, 0.0);
  X.hi = Eigen::VectorXd::Constant(1, r_max);
  X.embed = [theta](const Eigen::VectorXd& p) { return ChartPoint{make_circle_point(theta), p[0]}; };
  return X;
}

ParamSubmanifold tangent_pair(double r_max) {
  ParamSubmanifold X;
  X.name = "tangent-pair";
  X.dim = 1;
  X.lo = Eigen::VectorXd::Constant(1, -r_max);
  X.hi = Eigen::VectorXd::Constant(1, r_max);
  X.embed = [](const Eigen::VectorXd& p) {
    double t = p[0];
    if (t <= 0) return ChartPoint{make_circle_point(0.0), -t};
    return ChartPoint{make_circle_point(std::atan(t)), t * std::sqrt(1 + t * t)};
  };
  return X;
}

}  // namespace

TEST_CASE("transversality accepts radial germs and rejects tangential ones") {
  ConicMetricSpec spec = unit_cone();
  auto ray = check_p_submanifold(radial_ray(0.5, 1.0), spec, 0.1);
  CHECK(ray.pass);
  CHECK(ray.boundary_points == 1);
  CHECK(ray.min_radial_component == doctest::Approx(1.0).epsilon(1e-6));

  // a level arc never touches r = 0: vacuous pass
  ParamSubmanifold arc;
  arc.name = "arc";
  arc.dim = 1;
  arc.lo = Eigen::VectorXd::Constant(1, 0.0);
  arc.hi = Eigen::VectorXd::Constant(1, 2.0);
  arc.embed = [](const Eigen::VectorXd& p) { return ChartPoint{make_circle_point(p[0]), 0.4}; };
  auto level = check_p_submanifold(arc, spec, 0.1);
  CHECK(level.pass);
  CHECK(level.boundary_points == 0);

  // a curve approaching the apex tangentially to the boundary fails: take
  // (theta, r) = (s, s^2), whose tangent at s = 0 is purely angular
  ParamSubmanifold flat;
  flat.name = "tangential";
  flat.dim = 1;
  flat.lo = Eigen::VectorXd::Constant(1, 0.0);
  flat.hi = Eigen::VectorXd::Constant(1, 1.0);
  flat.embed = [](const Eigen::VectorXd& p) {
    return ChartPoint{make_circle_point(p[0]), p[0] * p[0]};
  };
  auto tangential = check_p_submanifold(flat, spec, 0.1);
  CHECK(!tangential.pass);
  CHECK(tangential.min_radial_component < 0.01);

  // both branches of the tangent pair are individually transversal
  auto pair = check_p_submanifold(tangent_pair(1.0), spec, 0.1);
  CHECK(pair.pass);
  CHECK(pair.min_radial_component == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
}

TEST_CASE("inner distance on a radial ray equals the radius gap") {
  ConicMetricSpec spec = unit_cone();
  InnerMetric inner(radial_ray(1.0, 1.0), spec);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.8);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 0.15);
  CHECK(inner.distance(a, b) == doctest::Approx(0.65).epsilon(1e-6));
  // ... and matches the ambient distance exactly: a ray is LNE with constant 1
  double outer = outer_distance(radial_ray(1.0, 1.0), spec, a, b);
  CHECK(outer == doctest::Approx(0.65).epsilon(1e-9));
}

TEST_CASE("inner distance on a level circle beats the arc bound") {
  // inner: arc length r * dtheta; outer: chord 2 r sin(dtheta / 2); the
  // half-circle ratio is pi / 2
  ConicMetricSpec spec = unit_cone();
  ParamSubmanifold circle;
  circle.name = "circle";
  circle.dim = 1;
  circle.lo = Eigen::VectorXd::Constant(1, 0.0);
  circle.hi = Eigen::VectorXd::Constant(1, M_PI);
  circle.embed = [](const Eigen::VectorXd& p) { return ChartPoint{make_circle_point(p[0]), 0.5}; };
  InnerMetric inner(circle, spec);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.0);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(1, M_PI);
  double in = inner.distance(a, b);
  double out = outer_distance(circle, spec, a, b);
  CHECK(in == doctest::Approx(0.5 * M_PI).epsilon(1e-4));
  CHECK(out == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(in / out == doctest::Approx(M_PI / 2).epsilon(1e-3));
}

TEST_CASE("scan flags the radial ray as bounded") {
  ConicMetricSpec spec = unit_cone();
  InnerMetric inner(radial_ray(0.0, 1.0), spec);
  LneScanOptions opts;
  opts.rungs = 6;
  opts.seed = 17;
  LneReport rep = lne_ratio_scan(inner, opts);
  CHECK(rep.verdict == LneReport::Verdict::Bounded);
  CHECK(rep.sup == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(rep.min_inner_minus_outer >= -1e-6);
}

TEST_CASE("scan flags the tangent pair as diverging like 2/s") {
  ConicMetricSpec spec = unit_cone();
  InnerMetric inner(tangent_pair(1.0), spec);
  LneScanOptions opts;
  opts.rungs = 7;
  opts.seed = 17;
  LneReport rep = lne_ratio_scan(inner, opts);
  CHECK(rep.verdict == LneReport::Verdict::Diverging);
  CHECK(rep.min_inner_minus_outer >= -opts.ratio_tolerance);
  // growth model: branches at parameter scale s sit at inner distance ~ 2s
  // but outer distance ~ s^2, so the ratio at the witness scale is ~ 2/s
  int checked = 0;
  for (const auto& rec : rep.ladder) {
    if (rec.skipped || rec.sup < 4.0) continue;
    double s = std::max(std::abs(rec.witness_a[0]), std::abs(rec.witness_b[0]));
    double model = 2.0 / s;
    CHECK(rec.sup >= model / 2.0);
    CHECK(rec.sup <= model * 2.0);
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("transverse ray pairs stay bounded") {
  ConicMetricSpec spec = unit_cone();
  ParamSubmanifold X;
  X.name = "ray-pair";
  X.dim = 1;
  X.lo = Eigen::VectorXd::Constant(1, -1.0);
  X.hi = Eigen::VectorXd::Constant(1, 1.0);
  X.embed = [](const Eigen::VectorXd& p) {
    double t = p[0];
    if (t <= 0) return ChartPoint{make_circle_point(0.0), -t};
    return ChartPoint{make_circle_point(1.0), t};  // second ray at angle 1
  };
  CHECK(check_p_submanifold(X, spec, 0.1).pass);
  InnerMetric inner(X, spec);
  LneScanOptions opts;
  opts.rungs = 6;
  opts.seed = 23;
  LneReport rep = lne_ratio_scan(inner, opts);
  CHECK(rep.verdict == LneReport::Verdict::Bounded);
  // inner = r + r', outer = cone chord at angle 1; the ratio never exceeds
  // the apex-route factor 1 / sin(1/2)
  CHECK(rep.sup <= 1.0 / std::sin(0.5) + 0.05);
}

TEST_CASE("cylinders over boundary arcs respect the predicted constant") {
  ConicMetricSpec spec = unit_cone();
  LneScanOptions opts;
  opts.rungs = 6;
  opts.seed = 29;
  CylinderLneReport rep = cylinder_lne_check(0.0, 2.0, 1.0, spec, opts);
  CHECK(rep.scan.verdict == LneReport::Verdict::Bounded);
  CHECK(rep.predicted_cap == doctest::Approx(2.0));
  CHECK(rep.within_prediction);
  CHECK(rep.scan.min_inner_minus_outer >= -opts.ratio_tolerance);
}

TEST_CASE("the scan respects a pluggable ambient distance") {
  // hereditary consistency: feeding the scan an ambient distance that is
  // already the inner distance of a superset keeps ratios finite and >= 1
  ConicMetricSpec spec = unit_cone();
  ParamSubmanifold ray = radial_ray(0.0, 1.0);
  InnerMetric inner(ray, spec);
  InnerMetric wide(tangent_pair(1.0), spec);  // superset containing the ray branch
  AmbientDistance ambient = [&](const ChartPoint& a, const ChartPoint& b) {
    Eigen::VectorXd pa = Eigen::VectorXd::Constant(1, -a.r);
    Eigen::VectorXd pb = Eigen::VectorXd::Constant(1, -b.r);
    return wide.distance(pa, pb);
  };
  LneScanOptions opts;
  opts.rungs = 4;
  opts.seed = 31;
  LneReport rep = lne_ratio_scan(inner, opts, ambient);
  CHECK(rep.verdict == LneReport::Verdict::Bounded);
  CHECK(rep.sup == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("argument validation") {
  ConicMetricSpec spec = unit_cone();
  ParamSubmanifold bad = radial_ray(0.0, 1.0);
  bad.dim = 3;
  CHECK_THROWS_AS(check_p_submanifold(bad, spec, 0.1), std::invalid_argument);
  ConicMetricSpec sphere_spec;
  sphere_spec.boundary = RoundSphere{2, 1.0};
  CHECK_THROWS_AS(check_p_submanifold(radial_ray(0.0, 1.0), sphere_spec, 0.1), std::domain_error);
  CHECK_THROWS_AS(cylinder_lne_check(1.0, 1.0, 1.0, spec, {}), std::invalid_argument);
}
