#include "tmc/postprocess.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace tmc {

namespace {

void voigt_accumulate(Eigen::MatrixXd& sig, int node, const Mat3& s, double w) {
  sig(node, 0) += w * s(0, 0);
  sig(node, 1) += w * s(1, 1);
  sig(node, 2) += w * s(2, 2);
  sig(node, 3) += w * s(0, 1);
  sig(node, 4) += w * s(1, 2);
  sig(node, 5) += w * s(0, 2);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

DerivedFields derive_fields(const Mesh& mesh, const DofMap& dofmap, const FieldState& state,
                            const MaterialTable& materials, ConductivityLaw law) {
  DerivedFields out;
  out.per_element.resize(mesh.elements.size());
  const int N = mesh.n_nodes();
  for (NodalAverages* na : {&out.solid, &out.medium}) {
    na->sigma = Eigen::MatrixXd::Zero(N, 6);
    na->q = Eigen::MatrixXd::Zero(N, 3);
    na->pressure = Eigen::VectorXd::Zero(N);
    na->touched.assign(N, 0);
  }
  Eigen::VectorXd weight_solid = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd weight_medium = Eigen::VectorXd::Zero(N);

  for (const auto& e : mesh.elements) {
    const ElementMaterial& mat = materials.by_region[e.region];
    const bool medium = mat.role == RegionRole::third_medium;
    const Eigen::MatrixXd Xe = mesh.element_coords(e);
    const int n = e.n_nodes();
    Eigen::MatrixXd u(n, mesh.dim);
    Eigen::VectorXd theta(n);
    for (int i = 0; i < n; ++i) {
      const Vec3 ui = node_displacement(dofmap, state.x, e.nodes[i]);
      for (int a = 0; a < mesh.dim; ++a) u(i, a) = ui[a];
      theta[i] = node_temperature(dofmap, state.x, e.nodes[i]);
    }
    auto& qps = out.per_element[e.id];
    for (const auto& qp : quadrature(e.kind)) {
      const ShapeEval se = shape_eval(e.kind, qp.xi, Xe);
      Mat3 F = Mat3::Identity();
      Vec3 grad_theta = Vec3::Zero();
      Vec3 Xq = Vec3::Zero();
      double th = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int a = 0; a < mesh.dim; ++a) {
          for (int b = 0; b < mesh.dim; ++b) F(a, b) += u(i, a) * se.grad(i, b);
          grad_theta[a] += theta[i] * se.grad(i, a);
          Xq[a] += se.N[i] * Xe(i, a);
        }
        th += se.N[i] * theta[i];
      }
      Kinematics kin;
      try {
        kin = kinematic_state(F);
      } catch (const ElementInversion& ex) {
        throw ElementInversion(e.id, static_cast<int>(qps.size()), ex.jac);
      }
      Mat3 S;
      double k_eff;
      if (medium) {
        S = medium_stress(kin, th, mat.medium).S;
        k_eff = medium_conductivity(kin.J, mat.medium, law);
      } else {
        S = solid_stress(kin, th, mat.solid).S;
        k_eff = mat.solid.k_theta;
      }
      QpDerived d;
      d.X = Xq;
      d.J = kin.J;
      d.sigma = (kin.F * S * kin.F.transpose()) / kin.J;
      const Vec3 Q = reference_heat_flux(kin, grad_theta, k_eff);
      d.q = (kin.F * Q) / kin.J;
      d.pressure = -d.sigma.trace() / 3.0;
      d.volume = qp.w * se.detJ;
      qps.push_back(d);

      NodalAverages& na = medium ? out.medium : out.solid;
      Eigen::VectorXd& wsum = medium ? weight_medium : weight_solid;
      for (int i = 0; i < n; ++i) {
        const int node = e.nodes[i];
        const double w = d.volume * se.N[i];
        voigt_accumulate(na.sigma, node, d.sigma, w);
        na.q.row(node) += w * d.q.transpose();
        na.pressure[node] += w * d.pressure;
        wsum[node] += w;
        na.touched[node] = 1;
      }
    }
  }
  for (int node = 0; node < N; ++node) {
    if (weight_solid[node] > 0.0) {
      out.solid.sigma.row(node) /= weight_solid[node];
      out.solid.q.row(node) /= weight_solid[node];
      out.solid.pressure[node] /= weight_solid[node];
    }
    if (weight_medium[node] > 0.0) {
      out.medium.sigma.row(node) /= weight_medium[node];
      out.medium.q.row(node) /= weight_medium[node];
      out.medium.pressure[node] /= weight_medium[node];
    }
  }
  return out;
}

ProfileField parse_profile_field(const std::string& name) {
  if (name == "T" || name == "temperature") return ProfileField::temperature;
  if (name == "ux") return ProfileField::ux;
  if (name == "uy") return ProfileField::uy;
  if (name == "uz") return ProfileField::uz;
  if (name == "p1") return ProfileField::p1;
  if (name == "p2") return ProfileField::p2;
  if (name == "p3") return ProfileField::p3;
  throw std::runtime_error("unknown profile field '" + name + "'");
}

namespace {

// Inverse isoparametric map: returns parent coordinates if the point lies in
// the element (within a small tolerance).
bool locate_in_element(const Mesh& mesh, const MeshElement& e, const Vec3& Xp, Vec3& xi) {
  const Eigen::MatrixXd Xe = mesh.element_coords(e);
  const int dim = mesh.dim;
  const double tol = 1e-9;
  if (e.kind == ElementKind::T1) {
    // Barycentric solve.
    Eigen::Matrix2d A;
    A << Xe(1, 0) - Xe(0, 0), Xe(2, 0) - Xe(0, 0), Xe(1, 1) - Xe(0, 1), Xe(2, 1) - Xe(0, 1);
    const Eigen::Vector2d rhs(Xp[0] - Xe(0, 0), Xp[1] - Xe(0, 1));
    const Eigen::Vector2d st = A.inverse() * rhs;
    if (st[0] < -tol || st[1] < -tol || st[0] + st[1] > 1.0 + tol) return false;
    xi = Vec3(st[0], st[1], 0.0);
    return true;
  }
  // Newton on the (bi/tri)linear map.
  xi = Vec3::Zero();
  for (int it = 0; it < 25; ++it) {
    Eigen::VectorXd Nv(e.n_nodes());
    Eigen::MatrixXd dNv(e.n_nodes(), dim);
    if (e.kind == ElementKind::Q1) {
      static const double xn[4] = {-1, 1, 1, -1};
      static const double yn[4] = {-1, -1, 1, 1};
      for (int i = 0; i < 4; ++i) {
        Nv[i] = 0.25 * (1 + xn[i] * xi[0]) * (1 + yn[i] * xi[1]);
        dNv(i, 0) = 0.25 * xn[i] * (1 + yn[i] * xi[1]);
        dNv(i, 1) = 0.25 * yn[i] * (1 + xn[i] * xi[0]);
      }
    } else {
      static const double xn[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
      static const double yn[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
      static const double zn[8] = {-1, -1, -1, -1, 1, 1, 1, 1};
      for (int i = 0; i < 8; ++i) {
        const double fx = 1 + xn[i] * xi[0], fy = 1 + yn[i] * xi[1], fz = 1 + zn[i] * xi[2];
        Nv[i] = 0.125 * fx * fy * fz;
        dNv(i, 0) = 0.125 * xn[i] * fy * fz;
        dNv(i, 1) = 0.125 * yn[i] * fx * fz;
        dNv(i, 2) = 0.125 * zn[i] * fx * fy;
      }
    }
    Eigen::VectorXd r = -Xp.head(dim);
    Eigen::MatrixXd Jp = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < e.n_nodes(); ++i) {
      r += Nv[i] * Xe.row(i).transpose();
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) Jp(a, b) += Xe(i, a) * dNv(i, b);
    }
    if (r.norm() < 1e-13) break;
    const Eigen::VectorXd dxi = Jp.partialPivLu().solve(r);
    for (int a = 0; a < dim; ++a) xi[a] -= dxi[a];
    if (dxi.norm() < 1e-14) break;
  }
  for (int a = 0; a < dim; ++a)
    if (std::abs(xi[a]) > 1.0 + tol) return false;
  return true;
}

double nodal_field_value(const DofMap& dofmap, const Eigen::VectorXd& x, int node,
                         ProfileField field) {
  switch (field) {
    case ProfileField::temperature: return node_temperature(dofmap, x, node);
    case ProfileField::ux: return x[dofmap.dof(node, 0)];
    case ProfileField::uy: return x[dofmap.dof(node, 1)];
    case ProfileField::uz:
      if (dofmap.dim < 3) throw std::runtime_error("uz profile on a 2D mesh");
      return x[dofmap.dof(node, 2)];
    default: {
      const int i = static_cast<int>(field) - static_cast<int>(ProfileField::p1);
      if (i >= dofmap.m || !dofmap.has_p[node]) return 0.0;
      return x[dofmap.dof(node, dofmap.dim + 1 + i)];
    }
  }
}

} // namespace

std::vector<ProfileSample> extract_profile(const Mesh& mesh, const DofMap& dofmap,
                                           const Eigen::VectorXd& x, const Vec3& start,
                                           const Vec3& end, int n_samples, ProfileField field) {
  if (n_samples < 2) throw std::runtime_error("extract_profile: need at least 2 samples");
  std::vector<ProfileSample> out(n_samples);

  // Element bounding boxes for the point search.
  std::vector<Vec3> lo(mesh.elements.size()), hi(mesh.elements.size());
  for (const auto& e : mesh.elements) {
    Vec3 l = mesh.X[e.nodes[0]], h = mesh.X[e.nodes[0]];
    for (int i = 1; i < e.n_nodes(); ++i) {
      l = l.cwiseMin(mesh.X[e.nodes[i]]);
      h = h.cwiseMax(mesh.X[e.nodes[i]]);
    }
    lo[e.id] = l;
    hi[e.id] = h;
  }
  const double pad = 1e-9 * (1.0 + domain_extent(mesh));

  for (int s = 0; s < n_samples; ++s) {
    ProfileSample& smp = out[s];
    smp.s = static_cast<double>(s) / (n_samples - 1);
    smp.X = start + smp.s * (end - start);
    smp.found = false;
    for (const auto& e : mesh.elements) {
      bool in_box = true;
      for (int a = 0; a < mesh.dim; ++a)
        if (smp.X[a] < lo[e.id][a] - pad || smp.X[a] > hi[e.id][a] + pad) in_box = false;
      if (!in_box) continue;
      Vec3 xi;
      if (!locate_in_element(mesh, e, smp.X, xi)) continue;
      const Eigen::MatrixXd Xe = mesh.element_coords(e);
      const ShapeEval se = shape_eval(e.kind, xi, Xe);
      smp.value = 0.0;
      smp.x = smp.X;
      for (int i = 0; i < e.n_nodes(); ++i) {
        smp.value += se.N[i] * nodal_field_value(dofmap, x, e.nodes[i], field);
        smp.x += se.N[i] * node_displacement(dofmap, x, e.nodes[i]);
      }
      smp.found = true;
      break;
    }
  }
  return out;
}

void export_vtk(const Mesh& mesh, const DofMap& dofmap, const FieldState& state,
                const DerivedFields* derived, const std::string& path, const VtkOptions& options) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "# vtk DataFile Version 3.0\n";
  out << "thermo-mechanical contact state\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";

  const int N = mesh.n_nodes();
  out << "POINTS " << N << " double\n";
  for (int n = 0; n < N; ++n) {
    Vec3 xp = mesh.X[n];
    if (options.deformed) xp += node_displacement(dofmap, state.x, n);
    out << fmt(xp[0]) << ' ' << fmt(xp[1]) << ' ' << fmt(xp[2]) << "\n";
  }

  std::vector<const MeshElement*> cells;
  for (const auto& e : mesh.elements)
    if (!(options.omit_medium && mesh.regions[e.region].role == RegionRole::third_medium))
      cells.push_back(&e);
  std::size_t list_len = 0;
  for (const auto* e : cells) list_len += 1 + e->n_nodes();
  out << "CELLS " << cells.size() << ' ' << list_len << "\n";
  for (const auto* e : cells) {
    out << e->n_nodes();
    for (int i = 0; i < e->n_nodes(); ++i) out << ' ' << e->nodes[i];
    out << "\n";
  }
  out << "CELL_TYPES " << cells.size() << "\n";
  for (const auto* e : cells) {
    int t = 5; // triangle
    if (e->kind == ElementKind::Q1) t = 9;
    if (e->kind == ElementKind::H1) t = 12;
    out << t << "\n";
  }

  out << "POINT_DATA " << N << "\n";
  out << "VECTORS displacement double\n";
  for (int n = 0; n < N; ++n) {
    const Vec3 u = node_displacement(dofmap, state.x, n);
    out << fmt(u[0]) << ' ' << fmt(u[1]) << ' ' << fmt(u[2]) << "\n";
  }
  out << "SCALARS temperature double 1\nLOOKUP_TABLE default\n";
  for (int n = 0; n < N; ++n) out << fmt(node_temperature(dofmap, state.x, n)) << "\n";
  for (int i = 0; i < dofmap.m; ++i) {
    out << "SCALARS p" << (i + 1) << " double 1\nLOOKUP_TABLE default\n";
    for (int n = 0; n < N; ++n)
      out << fmt(dofmap.has_p[n] ? state.x[dofmap.dof(n, dofmap.dim + 1 + i)] : 0.0) << "\n";
  }
  if (derived) {
    // Solid-side averages take precedence at interface nodes.
    auto pick = [&](int node, int col) {
      if (derived->solid.touched[node]) return derived->solid.sigma(node, col);
      return derived->medium.sigma(node, col);
    };
    static const char* names[6] = {"sigma_xx", "sigma_yy", "sigma_zz",
                                   "sigma_xy", "sigma_yz", "sigma_xz"};
    for (int c = 0; c < 6; ++c) {
      out << "SCALARS " << names[c] << " double 1\nLOOKUP_TABLE default\n";
      for (int n = 0; n < N; ++n) out << fmt(pick(n, c)) << "\n";
    }
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int n = 0; n < N; ++n)
      out << fmt(derived->solid.touched[n] ? derived->solid.pressure[n]
                                           : derived->medium.pressure[n])
          << "\n";
    out << "VECTORS heat_flux double\n";
    for (int n = 0; n < N; ++n) {
      const auto& na = derived->solid.touched[n] ? derived->solid : derived->medium;
      out << fmt(na.q(n, 0)) << ' ' << fmt(na.q(n, 1)) << ' ' << fmt(na.q(n, 2)) << "\n";
    }
  }
  out << "CELL_DATA " << cells.size() << "\n";
  out << "SCALARS region int 1\nLOOKUP_TABLE default\n";
  for (const auto* e : cells) out << e->region << "\n";
}

void export_history(const SolveHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "step,lambda,dlambda,iterations,residual,gap\n";
  for (const auto& s : history.steps)
    out << s.step << ',' << fmt(s.lambda) << ',' << fmt(s.dlambda) << ',' << s.iterations << ','
        << fmt(s.resid) << ',' << fmt(s.gap) << "\n";
}

double thermal_reaction(const Mesh& mesh, const DofMap& dofmap, const MaterialTable& materials,
                        const FieldState& state, const LoadProgram& program,
                        const std::vector<NeumannFace>& faces, const AssemblyOptions& opts,
                        const std::string& node_set) {
  const auto* set = mesh.find_node_set(node_set);
  if (!set) throw std::runtime_error("thermal_reaction: unknown node set '" + node_set + "'");
  const Eigen::VectorXd R = assemble_residual_full(mesh, dofmap, materials, state, program, faces, opts);
  double sum = 0.0;
  for (int n : *set) sum += R[dofmap.dof(n, dofmap.dim)];
  return sum;
}

} // namespace tmc
