#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace conic {

// Compact boundary manifolds N without boundary, with computable geodesic
// distance d_N. Closed-form families plus weighted mesh graphs.

struct Circle {
  double circumference = 0.0;
};

struct RoundSphere {
  int dimension = 0;  // dimension of the sphere itself, >= 1
  double radius = 0.0;
};

struct FlatTorus {
  Eigen::VectorXd periods;
};

struct MeshGraph {
  std::vector<Eigen::VectorXd> vertices;  // positions, reporting only
  std::vector<std::array<int, 2>> edges;
  std::vector<double> weights;

  // adjacency: per vertex, (neighbor vertex, edge index)
  std::vector<std::vector<std::pair<int, int>>> adjacency;

  void finalize();  // builds adjacency, validates connectivity and weights
};

using BoundaryGeometry = std::variant<Circle, RoundSphere, FlatTorus, MeshGraph>;

// Coordinates per geometry:
//   Circle      [s]           arc-length position in [0, circumference)
//   RoundSphere [u_0..u_n]    unit vector
//   FlatTorus   [t_0..t_k-1]  coordinates modulo periods
//   MeshGraph   [edge, t]     barycentric position t in [0,1] along an edge
struct BoundaryPoint {
  Eigen::VectorXd coords;
};

BoundaryPoint make_circle_point(double s);
BoundaryPoint make_sphere_point(const Eigen::VectorXd& u);
BoundaryPoint make_torus_point(const Eigen::VectorXd& t);
BoundaryPoint make_mesh_vertex(const MeshGraph& mesh, int vertex);
BoundaryPoint make_mesh_edge_point(const MeshGraph& mesh, int edge, double t);

int boundary_dim(const BoundaryGeometry& geom);
void validate_geometry(const BoundaryGeometry& geom);

// Normalizes into the fundamental domain; throws std::invalid_argument if the
// point is not on the geometry. Mesh positions within 1e-12 of an endpoint
// snap to that vertex.
BoundaryPoint normalize_point(const BoundaryGeometry& geom, const BoundaryPoint& p);

double boundary_distance(const BoundaryGeometry& geom, const BoundaryPoint& a,
                         const BoundaryPoint& b);

// Point at fraction t in [0,1] along a minimizing geodesic from a to b.
BoundaryPoint boundary_interpolate(const BoundaryGeometry& geom, const BoundaryPoint& a,
                                   const BoundaryPoint& b, double t);

// Discretized minimizing path with `steps` points, endpoints included.
std::vector<BoundaryPoint> boundary_geodesic(const BoundaryGeometry& geom,
                                             const BoundaryPoint& a,
                                             const BoundaryPoint& b, int steps);

double boundary_diameter(const BoundaryGeometry& geom);

// Squared g_N norm of a tangent vector at y. Closed-form families only;
// throws std::domain_error for meshes.
double boundary_tangent_norm_sq(const BoundaryGeometry& geom, const BoundaryPoint& y,
                                const Eigen::VectorXd& xi);

// Mesh file schema, one record per line, '#' comments:
//   v <x> [y z ...]     vertex position
//   e <i> <j> <weight>  undirected edge between vertex indices
MeshGraph load_mesh(std::istream& in);
MeshGraph load_mesh_file(const std::string& path);

}  // namespace conic
