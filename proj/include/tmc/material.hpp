#pragma once

#include "tmc/kinematics.hpp"
#include "tmc/types.hpp"

#include <array>
#include <span>

namespace tmc {

struct SolidParams {
  double K = 0.0;        // bulk modulus
  double mu = 0.0;       // shear modulus
  double alpha_t = 0.0;  // thermal expansion coefficient
  double k_theta = 0.0;  // thermal conductivity
  double theta0 = 0.0;   // reference temperature
};

struct MediumParams {
  double gamma = 0.0;    // stiffness scale of the barrier energy
  double alpha_tm = 0.0; // thermal expansion coefficient
  double k_tm = 0.0;     // gas conductivity
  double k_cap = 0.0;    // conductivity cap (conductivity of the adjoining solids)
  double beta1 = 1.0;    // penalty weight tying f_i to p_i/d
  double beta2 = 1e-2;   // gradient weight on p_i (already gamma-scaled)
  double theta0 = 0.0;
  double d = 1.0;        // domain scale, resolved from the mesh bounding box
};

enum class ConductivityLaw { paper, floored };

struct StressState {
  Mat3 S = Mat3::Zero(); // 2nd Piola-Kirchhoff
  Mat3 P = Mat3::Zero(); // 1st Piola-Kirchhoff, P = F S
};

// Neo-Hookean volumetric/isochoric energy with a volumetric thermal
// expansion coupling. The conduction term of the pseudo-potential is not an
// energy; it is assembled directly from the weak form in the element module.
double solid_energy(const Kinematics& kin, double theta, const SolidParams& p);
double medium_energy(const Kinematics& kin, double theta, const MediumParams& p);

// S = K lnJ C^-1 + mu J^(-2/3) (I - trC/3 C^-1) - 3 alpha (theta-theta0) K C^-1,
// with the temperature factor frozen during the C-derivative.
StressState solid_stress(const Kinematics& kin, double theta, const SolidParams& p);
StressState medium_stress(const Kinematics& kin, double theta, const MediumParams& p);

/// dS/dC of the frozen-temperature stress above (not doubled).
Tensor4 solid_stress_tangent(const Kinematics& kin, double theta, const SolidParams& p);
Tensor4 medium_stress_tangent(const Kinematics& kin, double theta, const MediumParams& p);

/// dS/dtheta at fixed C: -3 alpha K C^-1.
Mat3 solid_stress_dtheta(const Kinematics& kin, const SolidParams& p);
Mat3 medium_stress_dtheta(const Kinematics& kin, const MediumParams& p);

/// Effective conductivity of the third medium, min(k_tm ln^2 J, k_cap).
/// The floored variant min(k_tm max(1, ln^2 J), k_cap) keeps a gas-level
/// conduction at J = 1 and is exposed behind a config switch.
double medium_conductivity(double J, const MediumParams& p,
                           ConductivityLaw law = ConductivityLaw::paper);

struct ConductivitySlope {
  double k = 0.0;
  double dk_dJ = 0.0; // derivative of the active branch; zero on the cap
};
ConductivitySlope medium_conductivity_slope(double J, const MediumParams& p,
                                            ConductivityLaw law = ConductivityLaw::paper);

/// Reference heat flux Q = -J k_eff C^-1 grad_X(theta).
Vec3 reference_heat_flux(const Kinematics& kin, const Vec3& grad_theta, double k_eff);

/// Rotation proxy f_i of F with its first derivative and the constant
/// numerator/denominator patterns needed for the second derivative.
struct RotationProxyDerivative {
  double f = 0.0;
  double denom = 1.0;
  Mat3 df = Mat3::Zero(); // df/dF
  Mat3 dn = Mat3::Zero(); // d(numerator)/dF, constant
  Mat3 dd = Mat3::Zero(); // d(denominator)/dF, constant
};
std::array<RotationProxyDerivative, 3> rotation_proxy_derivatives(const Mat3& F);

/// Sum_i (beta1/2)(f_i - p_i/d)^2 + (beta2/2)|grad p_i|^2 over m proxies.
double regularization_density(std::span<const double> f, std::span<const double> p,
                              std::span<const Vec3> grad_p, double beta1, double beta2, double d);

} // namespace tmc
