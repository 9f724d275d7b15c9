#pragma once

#include "conic/metrics.hpp"

#include <functional>

namespace conic {

// Named coordinate transform from a cylinder chart into a model plane, with
// inverse on the smooth part and Jacobian evaluation.
struct ResolutionMap {
  std::string name;
  // chart coordinates are (theta, r); plane points are Cartesian
  std::function<Eigen::Vector2d(double theta, double r)> forward;
  std::function<std::pair<double, double>(const Eigen::Vector2d&)> inverse;
  std::function<Eigen::Matrix2d(double theta, double r)> jacobian;  // d(x,y)/d(theta,r)
};

// The singular plane metric whose unit-speed geodesics into the origin are
// logarithmic spirals:
//   h   = [2x^2-2xy+y^2]dx^2 + 2[x^2+xy-y^2]dxdy + [x^2+2xy+2y^2]dy^2
//   g   = h / r^2                                  (smooth off the origin)
//   g   = 2dr^2 + 2r dr dtheta + r^2 dtheta^2      (in plane polar coordinates)
// The resolution phi(theta, r) = r e^{i(theta - ln r)} pulls g back to the
// model cone metric dr^2 + r^2 dtheta^2.
struct LogSpiralExample {
  ResolutionMap phi;
  ConicMetricSpec model;  // dr^2 + r^2 dtheta^2 over Circle(2 pi)

  // g in Cartesian coordinates, matrix in the (dx, dy) basis; throws
  // std::domain_error at the origin.
  Eigen::Matrix2d cartesian_metric(const Eigen::Vector2d& p) const;

  // g in plane polar coordinates, matrix in the (dtheta, dr) basis.
  Eigen::Matrix2d polar_metric(double r) const;

  // Norm^2 of a chart tangent (d_theta, d_r) under phi^* g at (theta, r).
  double pullback_norm_sq(double theta, double r, double dtheta, double dr) const;

  // Max absolute entry of phi^* g - (dr^2 + r^2 dtheta^2) at (theta, r).
  double pullback_residual(double theta, double r) const;
};

LogSpiralExample logspiral_example();

}  // namespace conic
