#pragma once

#include "tmc/material.hpp"

#include <vector>

namespace tmc {

enum class ElementKind { T1, Q1, H1 };
enum class RegionRole { solid, third_medium };

int element_node_count(ElementKind kind);
int element_dim(ElementKind kind);
const char* element_kind_name(ElementKind kind);

/// Number of auxiliary regularization fields carried by third-medium nodes.
inline int proxy_count(int dim) { return dim == 2 ? 1 : 3; }

struct QuadraturePoint {
  Vec3 xi = Vec3::Zero();
  double w = 0.0;
};

/// T1: centroid rule (w = 1/2). Q1: 2x2 Gauss. H1: 2x2x2 Gauss.
const std::vector<QuadraturePoint>& quadrature(ElementKind kind);

struct ShapeEval {
  Eigen::VectorXd N;    // shape values per node
  Eigen::MatrixXd grad; // n x dim reference gradients
  double detJ = 0.0;    // parent-to-reference Jacobian determinant
};

ShapeEval shape_eval(ElementKind kind, const Vec3& xi, const Eigen::MatrixXd& X_nodes);

struct ElementMaterial {
  RegionRole role = RegionRole::solid;
  SolidParams solid;
  MediumParams medium;
};

struct ElementLoad {
  Vec3 body_force = Vec3::Zero(); // rho0 * b, reference volume force
  double heat_source = 0.0;       // rho0 * R
};

struct ElementOptions {
  ConductivityLaw law = ConductivityLaw::paper;
  bool fd_tangent = false; // debugging fallback replacing the analytic tangent
};

/// Nodal fields gathered on one element. p has proxy_count(dim) columns for
/// third-medium elements and is ignored for solids.
struct ElementFields {
  Eigen::MatrixXd u;     // n x dim
  Eigen::VectorXd theta; // n
  Eigen::MatrixXd p;     // n x m
};

/// Residual and exact tangent over the element DOFs, node-major with
/// per-node order (u_x .. u_dim, theta[, p_1 .. p_m]).
struct ElementSystem {
  Eigen::VectorXd r;
  Eigen::MatrixXd k;
};

int element_dofs_per_node(ElementKind kind, RegionRole role);

ElementSystem element_system(ElementKind kind, int element_id, const Eigen::MatrixXd& X_nodes,
                             const ElementFields& fields, const ElementMaterial& mat,
                             const ElementLoad& load, const ElementOptions& opts);

/// Residual only (used by the FD tangent fallback and reaction recovery).
Eigen::VectorXd element_residual(ElementKind kind, int element_id, const Eigen::MatrixXd& X_nodes,
                                 const ElementFields& fields, const ElementMaterial& mat,
                                 const ElementLoad& load, const ElementOptions& opts);

/// Shape evaluations at every quadrature point of one element; they depend
/// only on the reference geometry, so assembly caches them across iterations.
std::vector<ShapeEval> element_shape_table(ElementKind kind, const Eigen::MatrixXd& X_nodes);

ElementSystem element_system(ElementKind kind, int element_id, const Eigen::MatrixXd& X_nodes,
                             const std::vector<ShapeEval>& shapes, const ElementFields& fields,
                             const ElementMaterial& mat, const ElementLoad& load,
                             const ElementOptions& opts);

} // namespace tmc
