#include "conic/logspiral.hpp"

#include <cmath>
#include <stdexcept>

namespace conic {

Eigen::Matrix2d LogSpiralExample::cartesian_metric(const Eigen::Vector2d& p) const {
  double x = p.x(), y = p.y();
  double r2 = x * x + y * y;
  if (r2 == 0.0) throw std::domain_error("log-spiral metric is singular at the origin");
  Eigen::Matrix2d h;
  h(0, 0) = 2 * x * x - 2 * x * y + y * y;
  h(0, 1) = h(1, 0) = x * x + x * y - y * y;
  h(1, 1) = x * x + 2 * x * y + 2 * y * y;
  return h / r2;
}

Eigen::Matrix2d LogSpiralExample::polar_metric(double r) const {
  if (r <= 0.0) throw std::domain_error("log-spiral metric is singular at the origin");
  Eigen::Matrix2d g;
  g(0, 0) = r * r;  // dtheta^2 coefficient
  g(0, 1) = g(1, 0) = r;
  g(1, 1) = 2.0;
  return g;
}

double LogSpiralExample::pullback_norm_sq(double theta, double r, double dtheta,
                                          double dr) const {
  Eigen::Matrix2d J = phi.jacobian(theta, r);
  Eigen::Matrix2d G = cartesian_metric(phi.forward(theta, r));
  Eigen::Vector2d v(dtheta, dr);
  return v.dot(J.transpose() * G * J * v);
}

double LogSpiralExample::pullback_residual(double theta, double r) const {
  Eigen::Matrix2d J = phi.jacobian(theta, r);
  Eigen::Matrix2d G = cartesian_metric(phi.forward(theta, r));
  Eigen::Matrix2d pulled = J.transpose() * G * J;
  Eigen::Matrix2d model;
  model << r * r, 0.0, 0.0, 1.0;
  return (pulled - model).cwiseAbs().maxCoeff();
}

LogSpiralExample logspiral_example() {
  LogSpiralExample ex;
  ex.phi.name = "log-spiral resolution";
  ex.phi.forward = [](double theta, double r) -> Eigen::Vector2d {
    if (r == 0.0) return {0.0, 0.0};
    double a = theta - std::log(r);
    return {r * std::cos(a), r * std::sin(a)};
  };
  ex.phi.inverse = [](const Eigen::Vector2d& p) -> std::pair<double, double> {
    double r = p.norm();
    if (r == 0.0) throw std::domain_error("resolution inverse is undefined at the origin");
    double theta = std::atan2(p.y(), p.x()) + std::log(r);
    theta = std::fmod(theta, 2.0 * M_PI);
    if (theta < 0.0) theta += 2.0 * M_PI;
    return {theta, r};
  };
  ex.phi.jacobian = [](double theta, double r) -> Eigen::Matrix2d {
    if (r <= 0.0) throw std::domain_error("resolution Jacobian is undefined at r = 0");
    double a = theta - std::log(r);
    double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix2d J;
    J(0, 0) = -r * s;
    J(0, 1) = c + s;
    J(1, 0) = r * c;
    J(1, 1) = s - c;
    return J;
  };

  ex.model.boundary = Circle{2.0 * M_PI};
  ex.model.eta = std::numeric_limits<double>::infinity();
  ex.model.family = ConstantFamily{1.0};
  return ex;
}

}  // namespace conic
