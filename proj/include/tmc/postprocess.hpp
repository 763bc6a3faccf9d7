#pragma once

#include "tmc/solver.hpp"

#include <string>

namespace tmc {

/// Per-quadrature-point derived quantities plus volume-weighted nodal
/// averages, kept separate per region role so medium values never bleed into
/// solid nodes.
struct QpDerived {
  Vec3 X = Vec3::Zero(); // reference location of the quadrature point
  double J = 1.0;
  Mat3 sigma = Mat3::Zero(); // Cauchy stress
  Vec3 q = Vec3::Zero();     // spatial heat flux
  double pressure = 0.0;     // -tr(sigma)/3, plane strain includes sigma_zz
  double volume = 0.0;       // integration weight
};

struct NodalAverages {
  Eigen::MatrixXd sigma;    // N x 6 Voigt (xx, yy, zz, xy, yz, xz)
  Eigen::MatrixXd q;        // N x 3
  Eigen::VectorXd pressure; // N
  std::vector<char> touched;
};

struct DerivedFields {
  std::vector<std::vector<QpDerived>> per_element;
  NodalAverages solid;
  NodalAverages medium;
};

DerivedFields derive_fields(const Mesh& mesh, const DofMap& dofmap, const FieldState& state,
                            const MaterialTable& materials,
                            ConductivityLaw law = ConductivityLaw::paper);

enum class ProfileField { temperature, ux, uy, uz, p1, p2, p3 };
ProfileField parse_profile_field(const std::string& name);

struct ProfileSample {
  double s = 0.0;          // arc parameter along the reference line in [0, 1]
  Vec3 X = Vec3::Zero();   // reference sample point
  Vec3 x = Vec3::Zero();   // deformed position of the material point
  double value = 0.0;
  bool found = false;
};

/// Samples a nodal field along a material line, locating each point in the
/// reference configuration and interpolating with the element shape
/// functions. Points outside every element are reported as missing.
std::vector<ProfileSample> extract_profile(const Mesh& mesh, const DofMap& dofmap,
                                           const Eigen::VectorXd& x, const Vec3& start,
                                           const Vec3& end, int n_samples, ProfileField field);

struct VtkOptions {
  bool omit_medium = false;
  bool deformed = true;
};

/// Legacy VTK (version 3.0) ASCII unstructured grid with point data
/// (displacement, temperature, auxiliary fields, averaged stress and flux)
/// and region ids as cell data. Floating point written with 17 significant
/// digits so identical states export byte-identically.
void export_vtk(const Mesh& mesh, const DofMap& dofmap, const FieldState& state,
                const DerivedFields* derived, const std::string& path, const VtkOptions& options);

/// CSV history: step,lambda,dlambda,iterations,residual,gap.
void export_history(const SolveHistory& history, const std::string& path);

/// Sum of the unconstrained thermal residual rows over a node set: the
/// discrete heat flow entering the body through those nodes.
double thermal_reaction(const Mesh& mesh, const DofMap& dofmap, const MaterialTable& materials,
                        const FieldState& state, const LoadProgram& program,
                        const std::vector<NeumannFace>& faces, const AssemblyOptions& opts,
                        const std::string& node_set);

} // namespace tmc
