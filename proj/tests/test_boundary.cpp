#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conic/boundary.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace conic;

namespace {

// deterministic uniform sampling independent of std::uniform_real_distribution
double uniform01(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

MeshGraph house_mesh() {
  // 6-vertex "house": square with a roof apex and one interior diagonal
  MeshGraph m;
  m.vertices = {Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0), Eigen::Vector2d(2, 2),
                Eigen::Vector2d(0, 2), Eigen::Vector2d(1, 3), Eigen::Vector2d(1, 1)};
  m.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {2, 4}, {3, 4}, {0, 5}, {1, 5}, {2, 5}, {3, 5}};
  m.weights = {2.0, 2.0, 2.0, 2.0, std::sqrt(2.0), std::sqrt(2.0),
               std::sqrt(2.0), std::sqrt(2.0), std::sqrt(2.0), std::sqrt(2.0)};
  m.finalize();
  return m;
}

// exhaustive simple-path enumeration between mesh vertices; oracle for the
// Dijkstra implementation
double bruteforce_vertex_distance(const MeshGraph& m, int a, int b) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> used(m.vertices.size(), false);
  std::function<void(int, double)> walk = [&](int v, double acc) {
    if (acc >= best) return;
    if (v == b) {
      best = acc;
      return;
    }
    used[v] = true;
    for (auto [w, e] : m.adjacency[v])
      if (!used[w]) walk(w, acc + m.weights[e]);
    used[v] = false;
  };
  walk(a, 0.0);
  return best;
}

}  // namespace

TEST_CASE("circle distances wrap around") {
  Circle c{10.0};
  CHECK(boundary_distance(c, make_circle_point(1.0), make_circle_point(4.0)) == doctest::Approx(3.0));
  CHECK(boundary_distance(c, make_circle_point(1.0), make_circle_point(9.5)) == doctest::Approx(1.5));
  CHECK(boundary_distance(c, make_circle_point(0.0), make_circle_point(5.0)) == doctest::Approx(5.0));
  CHECK(boundary_diameter(c) == doctest::Approx(5.0));
}

TEST_CASE("sphere distances are great-circle arcs") {
  RoundSphere s{2, 1.0};
  BoundaryPoint north = make_sphere_point(Eigen::Vector3d(0, 0, 1));
  BoundaryPoint south = make_sphere_point(Eigen::Vector3d(0, 0, -1));
  BoundaryPoint equator = make_sphere_point(Eigen::Vector3d(1, 0, 0));
  CHECK(boundary_distance(s, north, south) == doctest::Approx(M_PI));
  CHECK(boundary_distance(s, north, equator) == doctest::Approx(M_PI / 2));
  CHECK(boundary_diameter(s) == doctest::Approx(M_PI));

  RoundSphere scaled{1, 2.5};
  BoundaryPoint a = make_sphere_point(Eigen::Vector2d(1, 0));
  BoundaryPoint b = make_sphere_point(Eigen::Vector2d(0, 1));
  CHECK(boundary_distance(scaled, a, b) == doctest::Approx(2.5 * M_PI / 2));
}

TEST_CASE("sphere geodesic through the poles has the right length") {
  RoundSphere s{2, 1.0};
  BoundaryPoint north = make_sphere_point(Eigen::Vector3d(0, 0, 1));
  BoundaryPoint south = make_sphere_point(Eigen::Vector3d(0, 0, -1));
  auto path = boundary_geodesic(s, north, south, 101);
  REQUIRE(path.size() == 101);
  double len = 0;
  for (size_t i = 0; i + 1 < path.size(); ++i)
    len += boundary_distance(s, path[i], path[i + 1]);
  CHECK(len == doctest::Approx(M_PI).epsilon(1e-6));
}

TEST_CASE("torus distances minimize over translates") {
  FlatTorus t;
  t.periods = Eigen::Vector2d(1.0, 3.0);
  BoundaryPoint a = make_torus_point(Eigen::Vector2d(0.1, 0.2));
  BoundaryPoint b = make_torus_point(Eigen::Vector2d(0.9, 2.9));
  CHECK(boundary_distance(t, a, b) ==
        doctest::Approx(std::sqrt(0.2 * 0.2 + 0.3 * 0.3)));
  CHECK(boundary_diameter(t) == doctest::Approx(std::sqrt(0.25 + 2.25)));
}

TEST_CASE("mesh vertex distances match exhaustive path enumeration") {
  MeshGraph m = house_mesh();
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      double expect = a == b ? 0.0 : bruteforce_vertex_distance(m, a, b);
      CHECK(boundary_distance(m, make_mesh_vertex(m, a), make_mesh_vertex(m, b)) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("mesh edge-interior points split the edge") {
  MeshGraph m = house_mesh();
  BoundaryPoint p = make_mesh_edge_point(m, 0, 0.25);  // on edge (0,1)
  CHECK(boundary_distance(m, p, make_mesh_vertex(m, 0)) == doctest::Approx(0.5));
  CHECK(boundary_distance(m, p, make_mesh_vertex(m, 1)) == doctest::Approx(1.5));
  // two interior points on the same edge
  BoundaryPoint q = make_mesh_edge_point(m, 0, 0.75);
  CHECK(boundary_distance(m, p, q) == doctest::Approx(1.0));
  // interior point to a far vertex: best of both endpoint routes
  double via0 = 0.5 + bruteforce_vertex_distance(m, 0, 4);
  double via1 = 1.5 + bruteforce_vertex_distance(m, 1, 4);
  CHECK(boundary_distance(m, p, make_mesh_vertex(m, 4)) ==
        doctest::Approx(std::min(via0, via1)));
}

TEST_CASE("mesh diameter matches the all-pairs maximum") {
  MeshGraph m = house_mesh();
  double expect = 0;
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b)
      expect = std::max(expect, bruteforce_vertex_distance(m, a, b));
  CHECK(boundary_diameter(m) == doctest::Approx(expect));
}

TEST_CASE("interpolation stays on minimizing geodesics") {
  std::mt19937_64 rng(2024);
  Circle c{7.0};
  FlatTorus t;
  t.periods = Eigen::Vector2d(2.0, 5.0);
  RoundSphere s{2, 1.3};
  for (int i = 0; i < 50; ++i) {
    BoundaryPoint a = make_circle_point(7.0 * uniform01(rng));
    BoundaryPoint b = make_circle_point(7.0 * uniform01(rng));
    double lambda = uniform01(rng);
    BoundaryPoint mid = boundary_interpolate(c, a, b, lambda);
    double d = boundary_distance(c, a, b);
    CHECK(boundary_distance(c, a, mid) == doctest::Approx(lambda * d).epsilon(1e-9));

    Eigen::Vector3d u(uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng) - 0.5);
    Eigen::Vector3d v(uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng) - 0.5);
    if (u.norm() < 1e-6 || v.norm() < 1e-6) continue;
    BoundaryPoint sa = make_sphere_point(u.normalized());
    BoundaryPoint sb = make_sphere_point(v.normalized());
    BoundaryPoint sm = boundary_interpolate(s, sa, sb, lambda);
    double sd = boundary_distance(s, sa, sb);
    CHECK(boundary_distance(s, sa, sm) == doctest::Approx(lambda * sd).epsilon(1e-6));

    Eigen::Vector2d ta(2.0 * uniform01(rng), 5.0 * uniform01(rng));
    Eigen::Vector2d tb(2.0 * uniform01(rng), 5.0 * uniform01(rng));
    BoundaryPoint tm = boundary_interpolate(t, make_torus_point(ta), make_torus_point(tb), lambda);
    double td = boundary_distance(t, make_torus_point(ta), make_torus_point(tb));
    CHECK(boundary_distance(t, make_torus_point(ta), tm) ==
          doctest::Approx(lambda * td).epsilon(1e-9));
  }
}

TEST_CASE("distance axioms hold on random samples") {
  std::mt19937_64 rng(11);
  MeshGraph m = house_mesh();
  std::vector<BoundaryGeometry> geoms = {Circle{3.0}, RoundSphere{2, 1.0}, m};
  for (const auto& geom : geoms) {
    auto sample = [&]() -> BoundaryPoint {
      if (std::holds_alternative<Circle>(geom)) return make_circle_point(3.0 * uniform01(rng));
      if (std::holds_alternative<RoundSphere>(geom)) {
        Eigen::Vector3d u(uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng) - 0.5);
        if (u.norm() < 1e-9) u = Eigen::Vector3d(1, 0, 0);
        return make_sphere_point(u.normalized());
      }
      int e = static_cast<int>(rng() % m.edges.size());
      return make_mesh_edge_point(m, e, uniform01(rng));
    };
    for (int i = 0; i < 60; ++i) {
      BoundaryPoint a = sample(), b = sample(), c = sample();
      double ab = boundary_distance(geom, a, b);
      double ba = boundary_distance(geom, b, a);
      double ac = boundary_distance(geom, a, c);
      double cb = boundary_distance(geom, c, b);
      CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
      CHECK(ab <= ac + cb + 1e-9);
      CHECK(boundary_distance(geom, a, a) == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("mesh loader parses vertices and edges") {
  std::istringstream in(
      "# triangle\n"
      "v 0 0\n"
      "v 1 0\n"
      "v 0.5 1\n"
      "e 0 1 1.0\n"
      "e 1 2 1.2\n"
      "e 2 0 1.2\n");
  MeshGraph m = load_mesh(in);
  CHECK(m.vertices.size() == 3);
  CHECK(m.edges.size() == 3);
  CHECK(boundary_distance(m, make_mesh_vertex(m, 0), make_mesh_vertex(m, 2)) ==
        doctest::Approx(1.2));
}

TEST_CASE("mesh loader rejects malformed input") {
  std::istringstream bad_index("v 0 0\nv 1 0\ne 0 5 1.0\n");
  CHECK_THROWS_AS(load_mesh(bad_index), std::invalid_argument);
  std::istringstream bad_weight("v 0 0\nv 1 0\ne 0 1 -2\n");
  CHECK_THROWS_AS(load_mesh(bad_weight), std::invalid_argument);
  std::istringstream disconnected("v 0 0\nv 1 0\nv 2 0\ne 0 1 1\n");
  CHECK_THROWS_AS(load_mesh(disconnected), std::invalid_argument);
  std::istringstream junk("v 0 0\nx 1 2\n");
  CHECK_THROWS_AS(load_mesh(junk), std::invalid_argument);
}

TEST_CASE("point validation rejects off-geometry coordinates") {
  RoundSphere s{2, 1.0};
  BoundaryPoint not_unit;
  not_unit.coords = Eigen::Vector3d(2, 0, 0);
  CHECK_THROWS_AS(normalize_point(s, not_unit), std::invalid_argument);
  Circle c{5.0};
  BoundaryPoint wrapped;
  wrapped.coords = Eigen::VectorXd::Constant(1, 7.5);
  CHECK(normalize_point(c, wrapped).coords[0] == doctest::Approx(2.5));
  MeshGraph m = house_mesh();
  BoundaryPoint off;
  off.coords = Eigen::Vector2d(0, 1.5);
  CHECK_THROWS_AS(normalize_point(m, off), std::invalid_argument);
}

TEST_CASE("tangent norms against closed forms") {
  Circle c{2 * M_PI};
  Eigen::VectorXd xi = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(boundary_tangent_norm_sq(c, make_circle_point(1.0), xi) == doctest::Approx(4.0));
  RoundSphere s{2, 2.0};
  BoundaryPoint p = make_sphere_point(Eigen::Vector3d(0, 0, 1));
  Eigen::Vector3d v(1.0, 0.5, 0.0);
  CHECK(boundary_tangent_norm_sq(s, p, v) == doctest::Approx(4.0 * 1.25));
  MeshGraph m = house_mesh();
  CHECK_THROWS_AS(boundary_tangent_norm_sq(m, make_mesh_vertex(m, 0), xi), std::domain_error);
}
