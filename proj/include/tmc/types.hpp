#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tmc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Dense fourth-order tensor on 3x3x3x3, used for constitutive tangents.
struct Tensor4 {
  double v[81] = {};
  double& operator()(int a, int b, int c, int d) { return v[((a * 3 + b) * 3 + c) * 3 + d]; }
  double operator()(int a, int b, int c, int d) const { return v[((a * 3 + b) * 3 + c) * 3 + d]; }
  void set_zero() { for (double& x : v) x = 0.0; }
};

// Determinant threshold below which a state counts as inverted.
inline constexpr double inversion_eps = 1e-12;
// Guard for the rotation-proxy denominators.
inline constexpr double proxy_denom_eps = 1e-8;

/// Retryable failure: a trial state inverted an element. The load stepping
/// controller reacts by halving the increment.
class ElementInversion : public std::runtime_error {
public:
  ElementInversion(int element, int qp, double jac)
      : std::runtime_error("element " + std::to_string(element) + " inverted at quadrature point " +
                           std::to_string(qp) + " (J=" + std::to_string(jac) + ")"),
        element(element), qp(qp), jac(jac) {}
  int element;
  int qp;
  double jac;
};

/// Retryable failure: a rotation-proxy denominator collapsed.
class DegenerateDistortion : public std::runtime_error {
public:
  DegenerateDistortion(int element, int qp, double denom)
      : std::runtime_error("element " + std::to_string(element) + " degenerate at quadrature point " +
                           std::to_string(qp) + " (proxy denominator " + std::to_string(denom) + ")"),
        element(element), qp(qp), denom(denom) {}
  int element = -1;
  int qp = -1;
  double denom;
};

} // namespace tmc
