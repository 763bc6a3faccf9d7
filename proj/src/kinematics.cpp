#include "tmc/kinematics.hpp"

#include <cmath>

namespace tmc {

Mat3 deformation_gradient(const Eigen::MatrixXd& grad_N, const Eigen::MatrixXd& u_nodes, int dim) {
  if (grad_N.rows() != u_nodes.rows() || grad_N.cols() != dim || u_nodes.cols() != dim)
    throw std::invalid_argument("deformation_gradient: dimension mismatch");
  Mat3 F = Mat3::Identity();
  for (Eigen::Index n = 0; n < grad_N.rows(); ++n)
    for (int i = 0; i < dim; ++i)
      for (int a = 0; a < dim; ++a)
        F(i, a) += u_nodes(n, i) * grad_N(n, a);
  return F;
}

Kinematics kinematic_state(const Mat3& F) {
  Kinematics k;
  k.F = F;
  k.J = F.determinant();
  if (!(k.J > inversion_eps)) throw ElementInversion(-1, -1, k.J);
  k.C = F.transpose() * F;
  k.Cinv = k.C.inverse();
  k.trC_iso = std::pow(k.J, -2.0 / 3.0) * k.C.trace();
  return k;
}

Kinematics kinematics_from_C(const Mat3& C) {
  Kinematics k;
  const double detC = C.determinant();
  if (!(detC > inversion_eps * inversion_eps)) throw ElementInversion(-1, -1, detC);
  k.J = std::sqrt(detC);
  k.C = C;
  k.Cinv = C.inverse();
  k.trC_iso = std::pow(k.J, -2.0 / 3.0) * C.trace();
  return k;
}

std::array<double, 3> rotation_proxies(const Mat3& F) {
  const double d1 = F(0, 0) + F(1, 1);
  const double d2 = F(2, 2) + F(0, 0);
  const double d3 = F(2, 2) + F(1, 1);
  for (double d : {d1, d2, d3})
    if (std::abs(d) < proxy_denom_eps) throw DegenerateDistortion(-1, -1, d);
  return {(F(0, 1) - F(1, 0)) / d1,
          (F(0, 2) - F(2, 0)) / d2,
          (F(1, 2) - F(2, 1)) / d3};
}

double thermal_jacobian(double theta, double theta0, double alpha_t) {
  return std::exp(3.0 * alpha_t * (theta - theta0));
}

} // namespace tmc
