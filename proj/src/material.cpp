#include "tmc/material.hpp"

#include <cmath>

namespace tmc {

namespace {

double core_energy(const Kinematics& kin, double theta, double K, double mu, double alpha,
                   double theta0) {
  const double lnJ = std::log(kin.J);
  return 0.5 * K * lnJ * lnJ + 0.5 * mu * (kin.trC_iso - 3.0) -
         3.0 * alpha * (theta - theta0) * K * lnJ;
}

Mat3 core_pk2(const Kinematics& kin, double theta, double K, double mu, double alpha,
              double theta0) {
  const double lnJ = std::log(kin.J);
  const double jm23 = std::pow(kin.J, -2.0 / 3.0);
  const double s1 = K * (lnJ - 3.0 * alpha * (theta - theta0));
  return s1 * kin.Cinv + mu * jm23 * (Mat3::Identity() - (kin.C.trace() / 3.0) * kin.Cinv);
}

// dS/dC with the temperature factor frozen. With A = C^-1, t = tr C:
//   dS_ab/dC_cd = (K/2) A_ab A_cd
//               + [s1 - (mu/3) J^(-2/3) t] B_abcd
//               - (mu/3) J^(-2/3) [A_cd delta_ab + delta_cd A_ab]
//               + (mu/9) J^(-2/3) t A_ab A_cd
// where B_abcd = -1/2 (A_ac A_bd + A_ad A_bc).
Tensor4 core_pk2_tangent(const Kinematics& kin, double theta, double K, double mu, double alpha,
                         double theta0) {
  const double lnJ = std::log(kin.J);
  const double jm23 = std::pow(kin.J, -2.0 / 3.0);
  const double t = kin.C.trace();
  const double s1 = K * (lnJ - 3.0 * alpha * (theta - theta0));
  const Mat3& A = kin.Cinv;
  const double b_coef = s1 - mu * jm23 * t / 3.0;
  Tensor4 out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const double B = -0.5 * (A(a, c) * A(b, d) + A(a, d) * A(b, c));
          double v = 0.5 * K * A(a, b) * A(c, d) + b_coef * B;
          v -= (mu / 3.0) * jm23 *
               (A(c, d) * ((a == b) ? 1.0 : 0.0) + ((c == d) ? 1.0 : 0.0) * A(a, b));
          v += (mu / 9.0) * jm23 * t * A(a, b) * A(c, d);
          out(a, b, c, d) = v;
        }
  return out;
}

} // namespace

double solid_energy(const Kinematics& kin, double theta, const SolidParams& p) {
  return core_energy(kin, theta, p.K, p.mu, p.alpha_t, p.theta0);
}

double medium_energy(const Kinematics& kin, double theta, const MediumParams& p) {
  return core_energy(kin, theta, p.gamma, p.gamma, p.alpha_tm, p.theta0);
}

StressState solid_stress(const Kinematics& kin, double theta, const SolidParams& p) {
  StressState s;
  s.S = core_pk2(kin, theta, p.K, p.mu, p.alpha_t, p.theta0);
  s.P = kin.F * s.S;
  return s;
}

StressState medium_stress(const Kinematics& kin, double theta, const MediumParams& p) {
  StressState s;
  s.S = core_pk2(kin, theta, p.gamma, p.gamma, p.alpha_tm, p.theta0);
  s.P = kin.F * s.S;
  return s;
}

Tensor4 solid_stress_tangent(const Kinematics& kin, double theta, const SolidParams& p) {
  return core_pk2_tangent(kin, theta, p.K, p.mu, p.alpha_t, p.theta0);
}

Tensor4 medium_stress_tangent(const Kinematics& kin, double theta, const MediumParams& p) {
  return core_pk2_tangent(kin, theta, p.gamma, p.gamma, p.alpha_tm, p.theta0);
}

Mat3 solid_stress_dtheta(const Kinematics& kin, const SolidParams& p) {
  return -3.0 * p.alpha_t * p.K * kin.Cinv;
}

Mat3 medium_stress_dtheta(const Kinematics& kin, const MediumParams& p) {
  return -3.0 * p.alpha_tm * p.gamma * kin.Cinv;
}

double medium_conductivity(double J, const MediumParams& p, ConductivityLaw law) {
  return medium_conductivity_slope(J, p, law).k;
}

ConductivitySlope medium_conductivity_slope(double J, const MediumParams& p, ConductivityLaw law) {
  const double lnJ = std::log(J);
  double ramp = lnJ * lnJ;
  bool ramp_active = true;
  if (law == ConductivityLaw::floored && ramp < 1.0) {
    ramp = 1.0;
    ramp_active = false;
  }
  ConductivitySlope out;
  const double v = p.k_tm * ramp;
  if (v >= p.k_cap) {
    out.k = p.k_cap;
    out.dk_dJ = 0.0;
  } else {
    out.k = v;
    out.dk_dJ = ramp_active ? 2.0 * p.k_tm * lnJ / J : 0.0;
  }
  return out;
}

Vec3 reference_heat_flux(const Kinematics& kin, const Vec3& grad_theta, double k_eff) {
  return -kin.J * k_eff * (kin.Cinv * grad_theta);
}

std::array<RotationProxyDerivative, 3> rotation_proxy_derivatives(const Mat3& F) {
  // Index pairs (numerator F_ab - F_ba, denominator F_cc + F_dd) per proxy.
  static constexpr int num[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  static constexpr int den[3][2] = {{0, 1}, {2, 0}, {2, 1}};
  std::array<RotationProxyDerivative, 3> out;
  for (int i = 0; i < 3; ++i) {
    const int a = num[i][0], b = num[i][1];
    const int c = den[i][0], d = den[i][1];
    RotationProxyDerivative& r = out[i];
    r.denom = F(c, c) + F(d, d);
    if (std::abs(r.denom) < proxy_denom_eps) throw DegenerateDistortion(-1, -1, r.denom);
    r.f = (F(a, b) - F(b, a)) / r.denom;
    r.dn(a, b) = 1.0;
    r.dn(b, a) = -1.0;
    r.dd(c, c) += 1.0;
    r.dd(d, d) += 1.0;
    r.df = (r.dn - r.f * r.dd) / r.denom;
  }
  return out;
}

double regularization_density(std::span<const double> f, std::span<const double> p,
                              std::span<const Vec3> grad_p, double beta1, double beta2, double d) {
  if (d <= 0.0) throw std::invalid_argument("regularization_density: d must be positive");
  double w = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = f[i] - p[i] / d;
    w += 0.5 * beta1 * e * e + 0.5 * beta2 * grad_p[i].squaredNorm();
  }
  return w;
}

} // namespace tmc
