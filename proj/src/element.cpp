#include "tmc/element.hpp"

#include <cmath>

namespace tmc {

int element_node_count(ElementKind kind) {
  switch (kind) {
    case ElementKind::T1: return 3;
    case ElementKind::Q1: return 4;
    case ElementKind::H1: return 8;
  }
  return 0;
}

int element_dim(ElementKind kind) { return kind == ElementKind::H1 ? 3 : 2; }

const char* element_kind_name(ElementKind kind) {
  switch (kind) {
    case ElementKind::T1: return "T1";
    case ElementKind::Q1: return "Q1";
    case ElementKind::H1: return "H1";
  }
  return "?";
}

int element_dofs_per_node(ElementKind kind, RegionRole role) {
  const int dim = element_dim(kind);
  return dim + 1 + (role == RegionRole::third_medium ? proxy_count(dim) : 0);
}

const std::vector<QuadraturePoint>& quadrature(ElementKind kind) {
  static const double g = 1.0 / std::sqrt(3.0);
  static const std::vector<QuadraturePoint> t1 = {{Vec3(1.0 / 3.0, 1.0 / 3.0, 0.0), 0.5}};
  static const std::vector<QuadraturePoint> q1 = {
      {Vec3(-g, -g, 0.0), 1.0}, {Vec3(g, -g, 0.0), 1.0},
      {Vec3(-g, g, 0.0), 1.0},  {Vec3(g, g, 0.0), 1.0}};
  static const std::vector<QuadraturePoint> h1 = [] {
    std::vector<QuadraturePoint> pts;
    for (int c = 0; c < 2; ++c)
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a)
          pts.push_back({Vec3(a ? g : -g, b ? g : -g, c ? g : -g), 1.0});
    return pts;
  }();
  switch (kind) {
    case ElementKind::T1: return t1;
    case ElementKind::Q1: return q1;
    case ElementKind::H1: return h1;
  }
  return t1;
}

namespace {

// Shape values and parent-space gradients at xi.
void parent_shapes(ElementKind kind, const Vec3& xi, Eigen::VectorXd& N, Eigen::MatrixXd& dN) {
  switch (kind) {
    case ElementKind::T1: {
      N.resize(3);
      dN.resize(3, 2);
      N << 1.0 - xi[0] - xi[1], xi[0], xi[1];
      dN << -1.0, -1.0, 1.0, 0.0, 0.0, 1.0;
      break;
    }
    case ElementKind::Q1: {
      static const double xn[4] = {-1.0, 1.0, 1.0, -1.0};
      static const double yn[4] = {-1.0, -1.0, 1.0, 1.0};
      N.resize(4);
      dN.resize(4, 2);
      for (int i = 0; i < 4; ++i) {
        N[i] = 0.25 * (1.0 + xn[i] * xi[0]) * (1.0 + yn[i] * xi[1]);
        dN(i, 0) = 0.25 * xn[i] * (1.0 + yn[i] * xi[1]);
        dN(i, 1) = 0.25 * yn[i] * (1.0 + xn[i] * xi[0]);
      }
      break;
    }
    case ElementKind::H1: {
      static const double xn[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
      static const double yn[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
      static const double zn[8] = {-1, -1, -1, -1, 1, 1, 1, 1};
      N.resize(8);
      dN.resize(8, 3);
      for (int i = 0; i < 8; ++i) {
        const double fx = 1.0 + xn[i] * xi[0];
        const double fy = 1.0 + yn[i] * xi[1];
        const double fz = 1.0 + zn[i] * xi[2];
        N[i] = 0.125 * fx * fy * fz;
        dN(i, 0) = 0.125 * xn[i] * fy * fz;
        dN(i, 1) = 0.125 * yn[i] * fx * fz;
        dN(i, 2) = 0.125 * zn[i] * fx * fy;
      }
      break;
    }
  }
}

} // namespace

ShapeEval shape_eval(ElementKind kind, const Vec3& xi, const Eigen::MatrixXd& X_nodes) {
  const int n = element_node_count(kind);
  const int dim = element_dim(kind);
  if (X_nodes.rows() != n || X_nodes.cols() != dim)
    throw std::invalid_argument("shape_eval: node coordinate shape mismatch");
  ShapeEval se;
  Eigen::MatrixXd dN;
  parent_shapes(kind, xi, se.N, dN);
  Eigen::MatrixXd Jp = Eigen::MatrixXd::Zero(dim, dim); // d X / d xi
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        Jp(a, b) += X_nodes(i, a) * dN(i, b);
  se.detJ = Jp.determinant();
  if (!(se.detJ > 0.0))
    throw std::runtime_error("shape_eval: singular or negative parent Jacobian (detJ=" +
                             std::to_string(se.detJ) + ")");
  se.grad = dN * Jp.inverse(); // grad_X N = Jp^-T grad_xi N, row-wise
  return se;
}

namespace {

struct Workspace {
  ElementKind kind;
  int dim = 2;
  int n = 0;
  int m = 0; // proxies per node, 0 for solids
  int dpn = 0;
  int ndof = 0;
  bool medium = false;

  int u_dof(int node, int i) const { return node * dpn + i; }
  int t_dof(int node) const { return node * dpn + dim; }
  int p_dof(int node, int i) const { return node * dpn + dim + 1 + i; }
};

void assemble_qp(const Workspace& ws, int element_id, int qp_id, const ShapeEval& se, double w,
                 const ElementFields& fields, const ElementMaterial& mat, const ElementLoad& load,
                 const ElementOptions& opts, Eigen::VectorXd& r, Eigen::MatrixXd* k) {
  const int dim = ws.dim, n = ws.n;
  const double dV = w * se.detJ;

  // Padded reference gradients (z component zero in 2D).
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, 3);
  G.leftCols(dim) = se.grad;

  Mat3 F = Mat3::Identity();
  for (int I = 0; I < n; ++I)
    for (int i = 0; i < dim; ++i)
      for (int a = 0; a < dim; ++a)
        F(i, a) += fields.u(I, i) * se.grad(I, a);

  Kinematics kin;
  try {
    kin = kinematic_state(F);
  } catch (const ElementInversion& e) {
    throw ElementInversion(element_id, qp_id, e.jac);
  }

  double theta = 0.0;
  Vec3 grad_theta = Vec3::Zero();
  for (int I = 0; I < n; ++I) {
    theta += se.N[I] * fields.theta[I];
    grad_theta += fields.theta[I] * G.row(I).transpose();
  }

  Mat3 S, dS_dtheta;
  Tensor4 dSdC;
  double k_eff = 0.0, dk_dJ = 0.0;
  if (ws.medium) {
    S = medium_stress(kin, theta, mat.medium).S;
    dS_dtheta = medium_stress_dtheta(kin, mat.medium);
    if (k) dSdC = medium_stress_tangent(kin, theta, mat.medium);
    const auto ks = medium_conductivity_slope(kin.J, mat.medium, opts.law);
    k_eff = ks.k;
    dk_dJ = ks.dk_dJ;
  } else {
    S = solid_stress(kin, theta, mat.solid).S;
    dS_dtheta = solid_stress_dtheta(kin, mat.solid);
    if (k) dSdC = solid_stress_tangent(kin, theta, mat.solid);
    k_eff = mat.solid.k_theta;
  }
  const Mat3 P = kin.F * S;
  const Mat3& A = kin.Cinv;

  // Mechanical rows: P : grad(delta u) - b . delta u
  for (int I = 0; I < n; ++I)
    for (int i = 0; i < dim; ++i) {
      double v = 0.0;
      for (int a = 0; a < dim; ++a) v += P(i, a) * se.grad(I, a);
      r[ws.u_dof(I, i)] += dV * (v - load.body_force[i] * se.N[I]);
    }

  // Thermal rows: -Q . grad(delta theta) - R delta theta, Q = -J k A grad(theta)
  const Vec3 Ag = A * grad_theta;
  for (int I = 0; I < n; ++I) {
    const double flux_term = kin.J * k_eff * G.row(I).dot(Ag);
    r[ws.t_dof(I)] += dV * (flux_term - load.heat_source * se.N[I]);
  }

  // Regularization of the third medium deformation through the auxiliary
  // fields p_i tied to the rotation proxies f_i.
  std::array<RotationProxyDerivative, 3> proxies;
  Eigen::VectorXd pval;     // m
  Eigen::MatrixXd grad_p;   // m x 3
  Eigen::MatrixXd dfg;      // per proxy: n x dim contraction (df_i . gradN_I)
  if (ws.medium) {
    try {
      proxies = rotation_proxy_derivatives(kin.F);
    } catch (const DegenerateDistortion& e) {
      throw DegenerateDistortion(element_id, qp_id, e.denom);
    }
    pval = Eigen::VectorXd::Zero(ws.m);
    grad_p = Eigen::MatrixXd::Zero(ws.m, 3);
    for (int i = 0; i < ws.m; ++i)
      for (int K = 0; K < n; ++K) {
        pval[i] += se.N[K] * fields.p(K, i);
        grad_p.row(i) += fields.p(K, i) * G.row(K);
      }
    const double b1 = mat.medium.beta1, b2 = mat.medium.beta2, d = mat.medium.d;
    dfg.resize(ws.m, n * dim);
    for (int i = 0; i < ws.m; ++i) {
      const auto& pr = proxies[i];
      const double e = pr.f - pval[i] / d;
      for (int I = 0; I < n; ++I)
        for (int ic = 0; ic < dim; ++ic) {
          double c = 0.0;
          for (int a = 0; a < dim; ++a) c += pr.df(ic, a) * se.grad(I, a);
          dfg(i, I * dim + ic) = c;
          r[ws.u_dof(I, ic)] += dV * b1 * e * c;
        }
      for (int K = 0; K < n; ++K)
        r[ws.p_dof(K, i)] +=
            dV * (-(b1 / d) * e * se.N[K] + b2 * grad_p.row(i).dot(G.row(K)));
    }
  }

  if (!k) return;
  Eigen::MatrixXd& K = *k;

  // K_uu: dP_ia/dF_jb = delta_ij S_ab + 2 F_ic F_je dS_ca/dC_be.
  // The material part is contracted in two stages through
  // T(I,b)(i,j) = sum_a G(I,a) W_ab(i,j) to keep the flop count down.
  Mat3 W[3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Mat3 M;
      for (int c = 0; c < 3; ++c)
        for (int e = 0; e < 3; ++e) M(c, e) = dSdC(c, a, b, e);
      W[a][b] = kin.F * M * kin.F.transpose();
    }
  std::vector<Mat3> T(static_cast<std::size_t>(n) * 3);
  for (int I = 0; I < n; ++I)
    for (int b = 0; b < dim; ++b) {
      Mat3 acc = Mat3::Zero();
      for (int a = 0; a < dim; ++a) acc += se.grad(I, a) * W[a][b];
      T[I * 3 + b] = acc;
    }
  for (int I = 0; I < n; ++I)
    for (int J = 0; J < n; ++J) {
      double geo = 0.0; // gradN_I . S . gradN_J
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) geo += se.grad(I, a) * S(a, b) * se.grad(J, b);
      Mat3 mtl = Mat3::Zero();
      for (int b = 0; b < dim; ++b) mtl += se.grad(J, b) * T[I * 3 + b];
      for (int i = 0; i < dim; ++i) {
        K(ws.u_dof(I, i), ws.u_dof(J, i)) += dV * geo;
        for (int j = 0; j < dim; ++j)
          K(ws.u_dof(I, i), ws.u_dof(J, j)) += dV * 2.0 * mtl(i, j);
      }
    }

  // K_utheta: dP/dtheta = F dS/dtheta
  const Mat3 dP_dtheta = kin.F * dS_dtheta;
  for (int I = 0; I < n; ++I)
    for (int i = 0; i < dim; ++i) {
      double v = 0.0;
      for (int a = 0; a < dim; ++a) v += dP_dtheta(i, a) * se.grad(I, a);
      for (int J = 0; J < n; ++J) K(ws.u_dof(I, i), ws.t_dof(J)) += dV * v * se.N[J];
    }

  // K_thetatheta: J k gradN_I . A . gradN_J
  for (int I = 0; I < n; ++I)
    for (int J = 0; J < n; ++J)
      K(ws.t_dof(I), ws.t_dof(J)) += dV * kin.J * k_eff * G.row(I).dot((A * G.row(J).transpose()));

  // K_thetau: derivative of J k(J) A grad_theta through J, the conductivity
  // branch and A. With h_I = F^-T gradN_I and fg = F^-T grad_theta:
  //   dr_I/du_Jj = J [ (k + J k') (gI.A.g) h_J - k (gI.A.gJ) fg - k (gJ.A.g) h_I ]_j
  {
    const Mat3 Finv = kin.F.inverse();
    const Vec3 fg = Finv.transpose() * grad_theta;
    Eigen::MatrixXd h(n, 3);    // F^-T gradN_I
    Eigen::VectorXd ag(n);      // gradN_I . A . grad_theta
    for (int I = 0; I < n; ++I) {
      h.row(I) = (Finv.transpose() * G.row(I).transpose()).transpose();
      ag[I] = G.row(I).dot(Ag);
    }
    const double c1 = k_eff + kin.J * dk_dJ;
    for (int I = 0; I < n; ++I)
      for (int J = 0; J < n; ++J) {
        const double gAgJ = G.row(I).dot((A * G.row(J).transpose()));
        for (int j = 0; j < dim; ++j) {
          const double v = kin.J * (c1 * ag[I] * h(J, j) - k_eff * gAgJ * fg[j] -
                                    k_eff * ag[J] * h(I, j));
          K(ws.t_dof(I), ws.u_dof(J, j)) += dV * v;
        }
      }
  }

  if (ws.medium) {
    const double b1 = mat.medium.beta1, b2 = mat.medium.beta2, d = mat.medium.d;
    for (int i = 0; i < ws.m; ++i) {
      const auto& pr = proxies[i];
      const double e = pr.f - pval[i] / d;
      const double D2 = pr.denom * pr.denom;
      // Contractions of the constant numerator/denominator patterns.
      Eigen::MatrixXd an(n, dim), ad(n, dim);
      for (int I = 0; I < n; ++I)
        for (int ic = 0; ic < dim; ++ic) {
          double vn = 0.0, vd = 0.0;
          for (int a = 0; a < dim; ++a) {
            vn += pr.dn(ic, a) * se.grad(I, a);
            vd += pr.dd(ic, a) * se.grad(I, a);
          }
          an(I, ic) = vn;
          ad(I, ic) = vd;
        }
      for (int I = 0; I < n; ++I)
        for (int ic = 0; ic < dim; ++ic) {
          const double dIc = dfg(i, I * dim + ic);
          for (int J = 0; J < n; ++J)
            for (int jc = 0; jc < dim; ++jc) {
              const double dJc = dfg(i, J * dim + jc);
              const double hterm = (-an(I, ic) * ad(J, jc) - ad(I, ic) * an(J, jc) +
                                    2.0 * pr.f * ad(I, ic) * ad(J, jc)) / D2;
              K(ws.u_dof(I, ic), ws.u_dof(J, jc)) += dV * b1 * (dIc * dJc + e * hterm);
            }
          for (int L = 0; L < n; ++L) {
            K(ws.u_dof(I, ic), ws.p_dof(L, i)) += dV * (-(b1 / d) * dIc * se.N[L]);
            K(ws.p_dof(L, i), ws.u_dof(I, ic)) += dV * (-(b1 / d) * se.N[L] * dIc);
          }
        }
      for (int Kn = 0; Kn < n; ++Kn)
        for (int L = 0; L < n; ++L)
          K(ws.p_dof(Kn, i), ws.p_dof(L, i)) +=
              dV * ((b1 / (d * d)) * se.N[Kn] * se.N[L] + b2 * G.row(Kn).dot(G.row(L)));
    }
  }
}

Workspace make_workspace(ElementKind kind, RegionRole role) {
  Workspace ws;
  ws.kind = kind;
  ws.dim = element_dim(kind);
  ws.n = element_node_count(kind);
  ws.medium = role == RegionRole::third_medium;
  ws.m = ws.medium ? proxy_count(ws.dim) : 0;
  ws.dpn = element_dofs_per_node(kind, role);
  ws.ndof = ws.n * ws.dpn;
  return ws;
}

void check_fields(const Workspace& ws, const ElementFields& fields) {
  if (fields.u.rows() != ws.n || fields.u.cols() != ws.dim || fields.theta.size() != ws.n)
    throw std::invalid_argument("element fields sized inconsistently with element kind");
  if (ws.medium && (fields.p.rows() != ws.n || fields.p.cols() != ws.m))
    throw std::invalid_argument("third-medium element requires n x m auxiliary field values");
}

} // namespace

std::vector<ShapeEval> element_shape_table(ElementKind kind, const Eigen::MatrixXd& X_nodes) {
  std::vector<ShapeEval> out;
  for (const auto& qp : quadrature(kind)) out.push_back(shape_eval(kind, qp.xi, X_nodes));
  return out;
}

Eigen::VectorXd element_residual(ElementKind kind, int element_id, const Eigen::MatrixXd& X_nodes,
                                 const ElementFields& fields, const ElementMaterial& mat,
                                 const ElementLoad& load, const ElementOptions& opts) {
  const Workspace ws = make_workspace(kind, mat.role);
  check_fields(ws, fields);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(ws.ndof);
  const auto& qps = quadrature(kind);
  for (std::size_t q = 0; q < qps.size(); ++q) {
    const ShapeEval se = shape_eval(kind, qps[q].xi, X_nodes);
    assemble_qp(ws, element_id, static_cast<int>(q), se, qps[q].w, fields, mat, load, opts, r,
                nullptr);
  }
  return r;
}

ElementSystem element_system(ElementKind kind, int element_id, const Eigen::MatrixXd& X_nodes,
                             const ElementFields& fields, const ElementMaterial& mat,
                             const ElementLoad& load, const ElementOptions& opts) {
  const Workspace ws = make_workspace(kind, mat.role);
  check_fields(ws, fields);
  ElementSystem sys;
  sys.r = Eigen::VectorXd::Zero(ws.ndof);
  sys.k = Eigen::MatrixXd::Zero(ws.ndof, ws.ndof);

  if (opts.fd_tangent) {
    sys.r = element_residual(kind, element_id, X_nodes, fields, mat, load, opts);
    // Central differences over every element DOF.
    ElementFields pert = fields;
    auto dof_ref = [&](ElementFields& f, int node, int comp) -> double& {
      if (comp < ws.dim) return f.u(node, comp);
      if (comp == ws.dim) return f.theta[node];
      return f.p(node, comp - ws.dim - 1);
    };
    for (int node = 0; node < ws.n; ++node)
      for (int comp = 0; comp < ws.dpn; ++comp) {
        double& x = dof_ref(pert, node, comp);
        const double x0 = x;
        const double h = 1e-7 * (1.0 + std::abs(x0));
        x = x0 + h;
        const Eigen::VectorXd rp =
            element_residual(kind, element_id, X_nodes, pert, mat, load, opts);
        x = x0 - h;
        const Eigen::VectorXd rm =
            element_residual(kind, element_id, X_nodes, pert, mat, load, opts);
        x = x0;
        sys.k.col(node * ws.dpn + comp) = (rp - rm) / (2.0 * h);
      }
    return sys;
  }

  const auto& qps = quadrature(kind);
  for (std::size_t q = 0; q < qps.size(); ++q) {
    const ShapeEval se = shape_eval(kind, qps[q].xi, X_nodes);
    assemble_qp(ws, element_id, static_cast<int>(q), se, qps[q].w, fields, mat, load, opts, sys.r,
                &sys.k);
  }
  return sys;
}

ElementSystem element_system(ElementKind kind, int element_id, const Eigen::MatrixXd& X_nodes,
                             const std::vector<ShapeEval>& shapes, const ElementFields& fields,
                             const ElementMaterial& mat, const ElementLoad& load,
                             const ElementOptions& opts) {
  if (opts.fd_tangent) return element_system(kind, element_id, X_nodes, fields, mat, load, opts);
  const Workspace ws = make_workspace(kind, mat.role);
  check_fields(ws, fields);
  ElementSystem sys;
  sys.r = Eigen::VectorXd::Zero(ws.ndof);
  sys.k = Eigen::MatrixXd::Zero(ws.ndof, ws.ndof);
  const auto& qps = quadrature(kind);
  for (std::size_t q = 0; q < qps.size(); ++q)
    assemble_qp(ws, element_id, static_cast<int>(q), shapes[q], qps[q].w, fields, mat, load, opts,
                sys.r, &sys.k);
  return sys;
}

} // namespace tmc

