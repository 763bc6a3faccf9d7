#pragma once

#include "tmc/types.hpp"

#include <array>

namespace tmc {

/// Deformation measures at a material point. 2D problems are embedded as
/// plane strain (F33 = 1) so every tensor here is a full 3x3 and the 3D
/// constitutive expressions apply unchanged.
struct Kinematics {
  Mat3 F = Mat3::Identity();
  double J = 1.0;       // det F
  Mat3 C = Mat3::Identity();
  Mat3 Cinv = Mat3::Identity();
  double trC_iso = 3.0; // J^(-2/3) tr C
};

/// F = I + sum_I u_I otimes gradN_I. grad_N rows are reference shape
/// gradients, u_nodes rows the nodal displacements; both use `dim` columns.
Mat3 deformation_gradient(const Eigen::MatrixXd& grad_N, const Eigen::MatrixXd& u_nodes, int dim);

/// Derived measures from F. Throws ElementInversion (with ids -1) when
/// det F <= inversion_eps; callers in element loops re-tag the ids.
Kinematics kinematic_state(const Mat3& F);

/// Same measures built from C alone (J = sqrt(det C)); F is left at identity
/// and must not be consumed. Used by derivative checks that perturb C.
Kinematics kinematics_from_C(const Mat3& C);

/// Rotation proxies f_i = skew/stretch component ratios of F. Only f1 is
/// meaningful in 2D; f2, f3 vanish under the plane-strain embedding.
/// Sign convention: f1 > 0 for F12 > F21.
std::array<double, 3> rotation_proxies(const Mat3& F);

/// Thermal volume ratio J_theta = exp(3 alpha_t (theta - theta0)).
double thermal_jacobian(double theta, double theta0, double alpha_t);

} // namespace tmc
