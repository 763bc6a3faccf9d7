#include "tmc/oracles.hpp"
#include "tmc/runner.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

namespace tmc {

namespace {

using oracles::fd_gradient;
using oracles::fd_jacobian;

struct Reporter {
  std::ostream& out;
  const std::string& only;
  int failures = 0;
  int ran = 0;

  bool selected(const std::string& group) const {
    return only.empty() || group.rfind(only, 0) == 0;
  }
  void check(const std::string& group, const std::string& name, bool ok,
             const std::string& detail = "") {
    if (!selected(group)) return;
    ++ran;
    if (!ok) ++failures;
    out << (ok ? "PASS " : "FAIL ") << group << '.' << name;
    if (!ok && !detail.empty()) out << ": " << detail;
    out << "\n";
  }
};

Mat3 random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Eigen::Quaterniond q(nd(rng), nd(rng), nd(rng), nd(rng));
  q.normalize();
  return q.toRotationMatrix();
}

Mat3 random_F(std::mt19937& rng, double spread = 0.35) {
  std::uniform_real_distribution<double> ud(-spread, spread);
  while (true) {
    Mat3 F = Mat3::Identity();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) F(a, b) += ud(rng);
    if (F.determinant() > 0.3) return F;
  }
}

// Random SPD C with J in [0.2, 5].
Mat3 random_C(std::mt19937& rng) {
  std::uniform_real_distribution<double> ud(0.5, 1.7);
  while (true) {
    const Mat3 R = random_rotation(rng);
    Vec3 lam(ud(rng), ud(rng), ud(rng));
    const double J = lam[0] * lam[1] * lam[2];
    if (J < 0.2 || J > 5.0) continue;
    return R * lam.cwiseProduct(lam).asDiagonal() * R.transpose();
  }
}

// Packs a symmetric tensor as (C00, C11, C22, C01, C02, C12); perturbing an
// off-diagonal slot moves both symmetric entries.
Eigen::VectorXd sym_to_vec(const Mat3& C) {
  Eigen::VectorXd v(6);
  v << C(0, 0), C(1, 1), C(2, 2), C(0, 1), C(0, 2), C(1, 2);
  return v;
}

Mat3 vec_to_sym(const Eigen::VectorXd& v) {
  Mat3 C;
  C << v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2];
  return C;
}

// S from the finite-difference gradient of the energy: S_diag = 2 g_diag,
// S_offdiag = g_offdiag (both symmetric entries move under the perturbation).
Mat3 stress_from_fd(const std::function<double(const Mat3&)>& energy, const Mat3& C) {
  const Eigen::VectorXd g = fd_gradient(
      [&](const Eigen::VectorXd& v) { return energy(vec_to_sym(v)); }, sym_to_vec(C));
  Mat3 S;
  S << 2 * g[0], g[3], g[4], g[3], 2 * g[1], g[5], g[4], g[5], 2 * g[2];
  return S;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double den = std::max(a.norm(), 1e-12);
  return (a - b).norm() / den;
}

SolidParams test_solid() { return {20.0, 10.0, 1e-4, 10.0, 0.0}; }

MediumParams test_medium() {
  MediumParams m;
  m.gamma = 1e-3;
  m.alpha_tm = 1e-4;
  m.k_tm = 0.5;
  m.k_cap = 50.0;
  m.beta1 = 1.0;
  m.beta2 = 1e-2;
  m.theta0 = 0.0;
  m.d = 2.0;
  return m;
}

Eigen::MatrixXd reference_coords(ElementKind kind, std::mt19937& rng, bool distort) {
  const int n = element_node_count(kind);
  const int dim = element_dim(kind);
  Eigen::MatrixXd X(n, dim);
  switch (kind) {
    case ElementKind::T1: X << 0, 0, 1, 0, 0, 1; break;
    case ElementKind::Q1: X << 0, 0, 1, 0, 1, 1, 0, 1; break;
    case ElementKind::H1:
      X << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1;
      break;
  }
  if (distort) {
    std::uniform_real_distribution<double> ud(-0.08, 0.08);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < dim; ++a) X(i, a) += ud(rng);
  }
  return X;
}

ElementFields random_fields(ElementKind kind, RegionRole role, std::mt19937& rng,
                            double u_spread = 0.06) {
  const int n = element_node_count(kind);
  const int dim = element_dim(kind);
  const int m = role == RegionRole::third_medium ? proxy_count(dim) : 0;
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  ElementFields f;
  f.u.resize(n, dim);
  f.theta.resize(n);
  f.p.resize(n, m);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) f.u(i, a) = u_spread * ud(rng);
    f.theta[i] = 8.0 * ud(rng);
    for (int k = 0; k < m; ++k) f.p(i, k) = 0.3 * ud(rng);
  }
  return f;
}

Eigen::VectorXd flatten_fields(const ElementFields& f) {
  const int n = static_cast<int>(f.u.rows());
  const int dim = static_cast<int>(f.u.cols());
  const int m = static_cast<int>(f.p.cols());
  Eigen::VectorXd x(n * (dim + 1 + m));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) x[k++] = f.u(i, a);
    x[k++] = f.theta[i];
    for (int j = 0; j < m; ++j) x[k++] = f.p(i, j);
  }
  return x;
}

ElementFields unflatten_fields(const Eigen::VectorXd& x, int n, int dim, int m) {
  ElementFields f;
  f.u.resize(n, dim);
  f.theta.resize(n);
  f.p.resize(n, m);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) f.u(i, a) = x[k++];
    f.theta[i] = x[k++];
    for (int j = 0; j < m; ++j) f.p(i, j) = x[k++];
  }
  return f;
}

void run_kinematics(Reporter& rep, std::mt19937& rng) {
  bool objective = true, iso_bound = true, antisym = true, det_svd = true;
  for (int s = 0; s < 100; ++s) {
    const Mat3 F = random_F(rng);
    const Mat3 R = random_rotation(rng);
    const Kinematics a = kinematic_state(F);
    const Kinematics b = kinematic_state(R * F);
    if ((a.C - b.C).norm() > 1e-12 * a.C.norm()) objective = false;
    if (a.trC_iso < 3.0 - 1e-12) iso_bound = false;
    const auto fw = rotation_proxies(F);
    const auto bw = rotation_proxies(F.transpose());
    for (int i = 0; i < 3; ++i)
      if (std::abs(fw[i] + bw[i]) > 1e-12 * (1.0 + std::abs(fw[i]))) antisym = false;
    const Eigen::JacobiSVD<Mat3> svd(F);
    const double Jsvd = svd.singularValues().prod();
    if (std::abs(a.J - Jsvd) > 1e-12 * Jsvd) det_svd = false;
  }
  rep.check("kinematics", "objectivity_of_C", objective);
  rep.check("kinematics", "isochoric_trace_lower_bound", iso_bound);
  rep.check("kinematics", "rotation_proxy_antisymmetry", antisym);
  rep.check("kinematics", "determinant_vs_singular_values", det_svd);
  rep.check("kinematics", "thermal_jacobian_reference",
            thermal_jacobian(300.0, 300.0, 1e-4) == 1.0 && thermal_jacobian(400.0, 300.0, 0.0) == 1.0);
}

void run_material_fd(Reporter& rep, std::mt19937& rng) {
  const SolidParams sp = test_solid();
  const MediumParams mp = test_medium();
  const double theta = 12.0;
  double worst_solid = 0.0, worst_medium = 0.0, worst_tangent = 0.0, worst_dtheta = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Mat3 C = random_C(rng);
    const Kinematics kin = kinematics_from_C(C);

    const Mat3 S_solid = solid_stress(kin, theta, sp).S;
    const Mat3 S_fd = stress_from_fd(
        [&](const Mat3& Cp) { return solid_energy(kinematics_from_C(Cp), theta, sp); }, C);
    worst_solid = std::max(worst_solid, rel_err(S_solid, S_fd));

    const Mat3 Sm = medium_stress(kin, theta, mp).S;
    const Mat3 Sm_fd = stress_from_fd(
        [&](const Mat3& Cp) { return medium_energy(kinematics_from_C(Cp), theta, mp); }, C);
    worst_medium = std::max(worst_medium, rel_err(Sm, Sm_fd));

    // dS/dC against a finite difference of the stress itself.
    const Tensor4 T = solid_stress_tangent(kin, theta, sp);
    const Eigen::MatrixXd J_fd = fd_jacobian(
        [&](const Eigen::VectorXd& v) {
          const Mat3 Sp = solid_stress(kinematics_from_C(vec_to_sym(v)), theta, sp).S;
          return Eigen::VectorXd(sym_to_vec(Sp));
        },
        sym_to_vec(C));
    // Columns for off-diagonal slots collect both symmetric C entries.
    Eigen::MatrixXd J_an(6, 6);
    const int ai[6] = {0, 1, 2, 0, 0, 1};
    const int bi[6] = {0, 1, 2, 1, 2, 2};
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) {
        const double v = T(ai[r], bi[r], ai[c], bi[c]);
        J_an(r, c) = c < 3 ? v : 2.0 * v;
      }
    worst_tangent = std::max(worst_tangent, rel_err(J_an, J_fd));

    const Mat3 dSdT = solid_stress_dtheta(kin, sp);
    const Eigen::VectorXd g = fd_gradient(
        [&](const Eigen::VectorXd& th) { return solid_stress(kin, th[0], sp).S(0, 0); },
        Eigen::VectorXd::Constant(1, theta));
    worst_dtheta = std::max(worst_dtheta, std::abs(dSdT(0, 0) - g[0]) /
                                              std::max(std::abs(dSdT(0, 0)), 1e-12));
  }
  rep.check("material_fd", "solid_stress_matches_energy_gradient", worst_solid < 1e-6,
            "worst " + std::to_string(worst_solid));
  rep.check("material_fd", "medium_stress_matches_energy_gradient", worst_medium < 1e-6,
            "worst " + std::to_string(worst_medium));
  rep.check("material_fd", "stress_tangent_matches_fd", worst_tangent < 1e-6,
            "worst " + std::to_string(worst_tangent));
  rep.check("material_fd", "stress_dtheta_matches_fd", worst_dtheta < 1e-6,
            "worst " + std::to_string(worst_dtheta));
}

void run_element_fd(Reporter& rep, std::mt19937& rng, int states_per_case) {
  const ElementOptions opts;
  for (ElementKind kind : {ElementKind::T1, ElementKind::Q1, ElementKind::H1}) {
    for (RegionRole role : {RegionRole::solid, RegionRole::third_medium}) {
      ElementMaterial mat;
      mat.role = role;
      mat.solid = test_solid();
      mat.medium = test_medium();
      ElementLoad load;
      load.body_force = Vec3(0.3, -0.2, 0.1);
      load.heat_source = 0.4;
      const int n = element_node_count(kind);
      const int dim = element_dim(kind);
      const int m = role == RegionRole::third_medium ? proxy_count(dim) : 0;
      double worst = 0.0;
      for (int s = 0; s < states_per_case; ++s) {
        const Eigen::MatrixXd X = reference_coords(kind, rng, s % 2 == 1);
        const ElementFields f = random_fields(kind, role, rng);
        const ElementSystem sys = element_system(kind, 0, X, f, mat, load, opts);
        const Eigen::MatrixXd K_fd = fd_jacobian(
            [&](const Eigen::VectorXd& x) {
              return element_residual(kind, 0, X, unflatten_fields(x, n, dim, m), mat, load, opts);
            },
            flatten_fields(f));
        worst = std::max(worst, rel_err(sys.k, K_fd));
      }
      std::ostringstream name;
      name << "tangent_vs_fd_" << element_kind_name(kind) << '_'
           << (role == RegionRole::solid ? "solid" : "medium");
      rep.check("element_fd", name.str(), worst < 1e-6, "worst " + std::to_string(worst));
    }
  }

  // Mechanical/auxiliary rows of the medium equal the gradient of the stored
  // energy (barrier + regularization) at fixed temperature.
  {
    ElementMaterial mat;
    mat.role = RegionRole::third_medium;
    mat.solid = test_solid();
    mat.medium = test_medium();
    const ElementKind kind = ElementKind::Q1;
    const Eigen::MatrixXd X = reference_coords(kind, rng, false);
    const ElementFields f = random_fields(kind, RegionRole::third_medium, rng);
    const int n = 4, dim = 2, m = 1;
    auto energy = [&](const Eigen::VectorXd& x) {
      const ElementFields pf = unflatten_fields(x, n, dim, m);
      double E = 0.0;
      for (const auto& qp : quadrature(kind)) {
        const ShapeEval se = shape_eval(kind, qp.xi, X);
        const Mat3 F = deformation_gradient(se.grad, pf.u, dim);
        const Kinematics kin = kinematic_state(F);
        double theta = 0.0;
        for (int i = 0; i < n; ++i) theta += se.N[i] * pf.theta[i];
        const auto proxies = rotation_proxies(F);
        double pv[1] = {0.0};
        Vec3 gp[1] = {Vec3::Zero()};
        for (int i = 0; i < n; ++i) {
          pv[0] += se.N[i] * pf.p(i, 0);
          gp[0].head<2>() += pf.p(i, 0) * se.grad.row(i).transpose();
        }
        const double fvals[1] = {proxies[0]};
        E += qp.w * se.detJ *
             (medium_energy(kin, theta, mat.medium) +
              regularization_density(fvals, {pv, 1}, {gp, 1}, mat.medium.beta1, mat.medium.beta2,
                                     mat.medium.d));
      }
      return E;
    };
    const Eigen::VectorXd x0 = flatten_fields(f);
    const Eigen::VectorXd g = fd_gradient(energy, x0);
    const Eigen::VectorXd r =
        element_residual(kind, 0, X, f, mat, ElementLoad{}, ElementOptions{});
    // Compare the u and p rows; the conduction rows are not energy-derived.
    Eigen::VectorXd r_sel(n * (dim + 1)), g_sel(n * (dim + 1));
    int k = 0;
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < dim; ++a, ++k) {
        r_sel[k] = r[i * (dim + 1 + m) + a];
        g_sel[k] = g[i * (dim + 1 + m) + a];
      }
      r_sel[k] = r[i * (dim + 1 + m) + dim + 1];
      g_sel[k] = g[i * (dim + 1 + m) + dim + 1];
      ++k;
    }
    const double err = (r_sel - g_sel).norm() / std::max(g_sel.norm(), 1e-12);
    rep.check("element_fd", "medium_rows_match_energy_gradient", err < 1e-6,
              "err " + std::to_string(err));
  }
}

void run_quadrature(Reporter& rep, std::mt19937& rng) {
  auto wsum = [](ElementKind k) {
    double s = 0.0;
    for (const auto& qp : quadrature(k)) s += qp.w;
    return s;
  };
  rep.check("quadrature", "t1_weight_sum", wsum(ElementKind::T1) == 0.5);
  rep.check("quadrature", "q1_weight_sum", wsum(ElementKind::Q1) == 4.0);
  rep.check("quadrature", "h1_weight_sum", wsum(ElementKind::H1) == 8.0);

  bool partition = true;
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (ElementKind kind : {ElementKind::T1, ElementKind::Q1, ElementKind::H1}) {
    const Eigen::MatrixXd X = reference_coords(kind, rng, true);
    for (int s = 0; s < 20; ++s) {
      Vec3 xi(ud(rng), ud(rng), ud(rng));
      if (kind == ElementKind::T1) xi = Vec3(0.3 * (1 + xi[0]) / 2, 0.3 * (1 + xi[1]) / 2, 0);
      const ShapeEval se = shape_eval(kind, xi, X);
      if (std::abs(se.N.sum() - 1.0) > 1e-12) partition = false;
      if (se.grad.colwise().sum().cwiseAbs().maxCoeff() > 1e-10) partition = false;
    }
  }
  rep.check("quadrature", "partition_of_unity", partition);
}

void run_conductivity(Reporter& rep) {
  MediumParams mp = test_medium();
  mp.k_tm = 1.0;
  mp.k_cap = 100.0;
  rep.check("conductivity", "zero_at_reference", medium_conductivity(1.0, mp) == 0.0);
  rep.check("conductivity", "ramp_value_at_inv_e",
            std::abs(medium_conductivity(std::exp(-1.0), mp) - mp.k_tm) < 1e-12);
  const double J_cap = std::exp(-std::sqrt(mp.k_cap / mp.k_tm));
  rep.check("conductivity", "cap_attained",
            std::abs(medium_conductivity(J_cap, mp) - mp.k_cap) < 1e-9 * mp.k_cap &&
                medium_conductivity(0.5 * J_cap, mp) == mp.k_cap);
  bool monotone = true, bounded = true;
  double prev = medium_conductivity(1.0, mp);
  for (double J = 1.0; J > 1e-4; J *= 0.97) {
    const double k = medium_conductivity(J, mp);
    if (k < prev - 1e-12) monotone = false;
    if (k > mp.k_cap + 1e-12 || k < 0.0) bounded = false;
    prev = k;
  }
  rep.check("conductivity", "nonincreasing_in_J_below_one", monotone);
  rep.check("conductivity", "bounded_by_cap", bounded);
  rep.check("conductivity", "floored_variant_floor",
            medium_conductivity(1.0, mp, ConductivityLaw::floored) == mp.k_tm);
}

void run_barrier(Reporter& rep) {
  const MediumParams mp = test_medium();
  double prev_pressure = -1e300;
  double prev_energy = -1e300;
  bool pressure_up = true, energy_up = true;
  for (double J : {0.5, 0.1, 0.01}) {
    const double s = std::cbrt(J);
    const Mat3 F = s * Mat3::Identity();
    const Kinematics kin = kinematic_state(F);
    const StressState st = medium_stress(kin, mp.theta0, mp);
    const Mat3 sigma = kin.F * st.S * kin.F.transpose() / kin.J;
    const double pressure = -sigma.trace() / 3.0;
    if (pressure <= prev_pressure) pressure_up = false;
    prev_pressure = pressure;
    const double e = medium_energy(kin, mp.theta0, mp);
    if (e <= prev_energy) energy_up = false;
    prev_energy = e;
  }
  rep.check("barrier", "pressure_monotone_under_compression", pressure_up);
  rep.check("barrier", "energy_monotone_under_compression", energy_up);
}

void run_regularization(Reporter& rep, std::mt19937& rng) {
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  bool zero_iff = true, positive = true;
  for (int s = 0; s < 200; ++s) {
    double f[3], p[3];
    Vec3 gp[3];
    const double d = 2.0;
    bool penalties_vanish = true;
    for (int i = 0; i < 3; ++i) {
      f[i] = ud(rng);
      if (s % 3 == 0) {
        p[i] = d * f[i];
        gp[i] = Vec3::Zero();
      } else {
        p[i] = ud(rng);
        gp[i] = Vec3(ud(rng), ud(rng), 0.0);
      }
      if (std::abs(f[i] - p[i] / d) > 0.0 || gp[i].squaredNorm() > 0.0) penalties_vanish = false;
    }
    const double w = regularization_density({f, 3}, {p, 3}, {gp, 3}, 1.0, 1e-2, d);
    if (w < 0.0) positive = false;
    if (penalties_vanish != (w == 0.0)) zero_iff = false;
  }
  rep.check("regularization", "zero_iff_both_penalties_vanish", zero_iff);
  rep.check("regularization", "nonnegative", positive);
}

void run_mesh_roundtrip(Reporter& rep) {
  for (const char* preset : {"block2d", "two_blocks2d", "wavy_interface2d", "block_plate3d"}) {
    PresetOptions opt;
    opt.nx = preset == std::string("block_plate3d") ? 4 : 8;
    opt.solid_layers = 4;
    opt.upper_layers = 4;
    opt.medium_layers = 2;
    const Mesh mesh = generate_preset_mesh(preset, opt);
    std::stringstream buf;
    save_mesh(mesh, buf);
    const Mesh back = load_mesh(buf);
    bool same = back.n_nodes() == mesh.n_nodes() && back.elements.size() == mesh.elements.size() &&
                back.regions.size() == mesh.regions.size() &&
                back.node_sets.size() == mesh.node_sets.size();
    if (same)
      for (std::size_t e = 0; e < mesh.elements.size(); ++e)
        if (back.elements[e].nodes != mesh.elements[e].nodes ||
            back.elements[e].kind != mesh.elements[e].kind ||
            back.elements[e].region != mesh.elements[e].region)
          same = false;
    if (same)
      for (std::size_t s = 0; s < mesh.node_sets.size(); ++s)
        if (back.node_sets[s] != mesh.node_sets[s]) same = false;
    rep.check("mesh", std::string("roundtrip_") + preset, same);
  }
}

} // namespace

int verify_properties(const std::string& only, std::ostream& out) {
  std::mt19937 rng(20250810);
  Reporter rep{out, only};
  run_kinematics(rep, rng);
  run_material_fd(rep, rng);
  run_element_fd(rep, rng, 8);
  run_quadrature(rep, rng);
  run_conductivity(rep);
  run_barrier(rep);
  run_regularization(rep, rng);
  run_mesh_roundtrip(rep);
  if (rep.ran == 0) {
    out << "no properties match selector '" << only << "'\n";
    return exit_code::validation;
  }
  if (rep.failures == 0)
    out << "all " << rep.ran << " properties passed\n";
  else
    out << rep.failures << " of " << rep.ran << " properties failed\n";
  return rep.failures == 0 ? exit_code::ok : exit_code::property_failure;
}

} // namespace tmc
