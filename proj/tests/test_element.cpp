#include "tmc/element.hpp"
#include "tmc/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tmc;

namespace {

ElementMaterial solid_material() {
  ElementMaterial m;
  m.role = RegionRole::solid;
  m.solid = {20.0, 10.0, 1e-4, 10.0, 0.0};
  return m;
}

ElementMaterial medium_material() {
  ElementMaterial m;
  m.role = RegionRole::third_medium;
  m.medium.gamma = 1e-3;
  m.medium.alpha_tm = 1e-4;
  m.medium.k_tm = 0.5;
  m.medium.k_cap = 50.0;
  m.medium.beta1 = 1.0;
  m.medium.beta2 = 1e-2;
  m.medium.d = 2.0;
  return m;
}

Eigen::MatrixXd reference_coords(ElementKind kind) {
  const int n = element_node_count(kind);
  Eigen::MatrixXd X(n, element_dim(kind));
  switch (kind) {
    case ElementKind::T1: X << 0, 0, 1, 0, 0, 1; break;
    case ElementKind::Q1: X << 0, 0, 1, 0, 1, 1, 0, 1; break;
    case ElementKind::H1:
      X << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1;
      break;
  }
  return X;
}

ElementFields zero_fields(ElementKind kind, RegionRole role) {
  const int n = element_node_count(kind);
  const int dim = element_dim(kind);
  const int m = role == RegionRole::third_medium ? proxy_count(dim) : 0;
  ElementFields f;
  f.u = Eigen::MatrixXd::Zero(n, dim);
  f.theta = Eigen::VectorXd::Zero(n);
  f.p = Eigen::MatrixXd::Zero(n, m);
  return f;
}

ElementFields random_fields(ElementKind kind, RegionRole role, std::mt19937& rng) {
  ElementFields f = zero_fields(kind, role);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int i = 0; i < f.u.rows(); ++i) {
    for (int a = 0; a < f.u.cols(); ++a) f.u(i, a) = 0.06 * ud(rng);
    f.theta[i] = 8.0 * ud(rng);
    for (int k = 0; k < f.p.cols(); ++k) f.p(i, k) = 0.3 * ud(rng);
  }
  return f;
}

Eigen::VectorXd flatten(const ElementFields& f) {
  const int n = static_cast<int>(f.u.rows()), dim = static_cast<int>(f.u.cols()),
            m = static_cast<int>(f.p.cols());
  Eigen::VectorXd x(n * (dim + 1 + m));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) x[k++] = f.u(i, a);
    x[k++] = f.theta[i];
    for (int j = 0; j < m; ++j) x[k++] = f.p(i, j);
  }
  return x;
}

ElementFields unflatten(const Eigen::VectorXd& x, int n, int dim, int m) {
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

} // namespace

TEST_CASE("shape functions interpolate and partition unity") {
  const Eigen::MatrixXd X = reference_coords(ElementKind::Q1);
  // Kronecker property at a corner
  const ShapeEval corner = shape_eval(ElementKind::Q1, Vec3(-1, -1, 0), X);
  CHECK(corner.N[0] == doctest::Approx(1.0));
  CHECK(corner.N[1] == doctest::Approx(0.0));
  CHECK(corner.N[2] == doctest::Approx(0.0));
  CHECK(corner.N[3] == doctest::Approx(0.0));
  // symmetric center
  const ShapeEval center = shape_eval(ElementKind::Q1, Vec3(0, 0, 0), X);
  for (int i = 0; i < 4; ++i) CHECK(center.N[i] == doctest::Approx(0.25));

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (ElementKind kind : {ElementKind::T1, ElementKind::Q1, ElementKind::H1}) {
    const Eigen::MatrixXd Xk = reference_coords(kind);
    for (int s = 0; s < 10; ++s) {
      Vec3 xi(ud(rng), ud(rng), ud(rng));
      if (kind == ElementKind::T1) xi = Vec3(0.25 * (1 + xi[0]), 0.25 * (1 + xi[1]), 0);
      const ShapeEval se = shape_eval(kind, xi, Xk);
      CHECK(se.N.sum() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(se.grad.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
      CHECK(se.detJ > 0.0);
    }
  }
}

TEST_CASE("degenerate element geometry is reported") {
  Eigen::MatrixXd X = reference_coords(ElementKind::Q1);
  X.row(2) = X.row(0); // collapse a corner
  CHECK_THROWS(shape_eval(ElementKind::Q1, Vec3(0, 0, 0), X));
}

TEST_CASE("quadrature weights sum to the parent measure") {
  auto wsum = [](ElementKind k) {
    double s = 0.0;
    for (const auto& qp : quadrature(k)) s += qp.w;
    return s;
  };
  CHECK(wsum(ElementKind::T1) == 0.5);
  CHECK(wsum(ElementKind::Q1) == 4.0);
  CHECK(wsum(ElementKind::H1) == 8.0);
  CHECK(quadrature(ElementKind::T1).size() == 1);
  CHECK(quadrature(ElementKind::Q1).size() == 4);
  CHECK(quadrature(ElementKind::H1).size() == 8);
}

TEST_CASE("reference state is an equilibrium") {
  for (ElementKind kind : {ElementKind::T1, ElementKind::Q1, ElementKind::H1}) {
    for (auto mat : {solid_material(), medium_material()}) {
      const ElementFields f = zero_fields(kind, mat.role);
      const ElementSystem sys =
          element_system(kind, 0, reference_coords(kind), f, mat, {}, {});
      CHECK(sys.r.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("rigid translation and uniform temperature leave zero rows") {
  const ElementMaterial mat = solid_material();
  ElementFields f = zero_fields(ElementKind::Q1, mat.role);
  f.u.col(0).setConstant(0.8);
  f.u.col(1).setConstant(-1.3);
  f.theta.setConstant(0.0); // theta0
  const ElementSystem sys = element_system(ElementKind::Q1, 0, reference_coords(ElementKind::Q1),
                                           f, mat, {}, {});
  CHECK(sys.r.cwiseAbs().maxCoeff() < 1e-12 * mat.solid.K);
  // uniform nonzero temperature: thermal rows vanish (no gradient), and with
  // alpha_t > 0 the mechanical rows carry only the thermal pre-stress
  f.theta.setConstant(40.0);
  const ElementSystem sys2 = element_system(ElementKind::Q1, 0, reference_coords(ElementKind::Q1),
                                            f, mat, {}, {});
  for (int i = 0; i < 4; ++i) CHECK(std::abs(sys2.r[i * 3 + 2]) < 1e-14);
}

TEST_CASE("patch consistency: affine displacement reproduces the homogeneous stress") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ud(-0.08, 0.08);
  const ElementMaterial mat = solid_material();
  for (ElementKind kind : {ElementKind::T1, ElementKind::Q1, ElementKind::H1}) {
    const int dim = element_dim(kind);
    const Eigen::MatrixXd X = reference_coords(kind);
    Eigen::MatrixXd A(dim, dim);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) A(a, b) = ud(rng);
    ElementFields f = zero_fields(kind, mat.role);
    f.u = X * A.transpose(); // u = A X
    const double theta = 12.0;
    f.theta.setConstant(theta);
    Mat3 F = Mat3::Identity();
    F.topLeftCorner(dim, dim) += A;
    const StressState st = solid_stress(kinematic_state(F), theta, mat.solid);

    const ElementSystem sys = element_system(kind, 0, X, f, mat, {}, {});
    // r_u(I,i) = sum_q w detJ P(i,a) gradN(I,a); F is constant so the exact
    // integral uses the same P at every point
    const int n = element_node_count(kind);
    for (int I = 0; I < n; ++I)
      for (int i = 0; i < dim; ++i) {
        double exact = 0.0;
        for (const auto& qp : quadrature(kind)) {
          const ShapeEval se = shape_eval(kind, qp.xi, X);
          for (int a = 0; a < dim; ++a)
            exact += qp.w * se.detJ * st.P(i, a) * se.grad(I, a);
        }
        CHECK(sys.r[I * (dim + 1) + i] == doctest::Approx(exact).epsilon(1e-12));
      }
  }
}

TEST_CASE("regularization rows vanish for consistent auxiliary fields") {
  const ElementMaterial mat = medium_material();
  const ElementKind kind = ElementKind::Q1;
  const Eigen::MatrixXd X = reference_coords(kind);
  // simple shear: constant F with a nonzero rotation proxy
  ElementFields f = zero_fields(kind, mat.role);
  for (int i = 0; i < 4; ++i) f.u(i, 0) = 0.3 * X(i, 1);
  Mat3 F = Mat3::Identity();
  F(0, 1) = 0.3;
  const double f1 = (F(0, 1) - F(1, 0)) / (F(0, 0) + F(1, 1));
  f.p.col(0).setConstant(mat.medium.d * f1);

  const ElementSystem sys = element_system(kind, 0, X, f, mat, {}, {});
  // p rows vanish
  for (int I = 0; I < 4; ++I) CHECK(std::abs(sys.r[I * 4 + 3]) < 1e-14);
  // u rows equal the pure-stress element (regularization contributes nothing)
  ElementMaterial no_reg = mat;
  no_reg.medium.beta1 = 1e-300;
  no_reg.medium.beta2 = 1e-300;
  const ElementSystem stress_only = element_system(kind, 0, X, f, no_reg, {}, {});
  for (int I = 0; I < 4; ++I)
    for (int i = 0; i < 2; ++i)
      CHECK(sys.r[I * 4 + i] == doctest::Approx(stress_only.r[I * 4 + i]).epsilon(1e-12));
}

TEST_CASE("analytic tangents match finite differences on random states") {
  std::mt19937 rng(2024);
  for (ElementKind kind : {ElementKind::T1, ElementKind::Q1, ElementKind::H1}) {
    for (auto mat : {solid_material(), medium_material()}) {
      const int n = element_node_count(kind);
      const int dim = element_dim(kind);
      const int m = mat.role == RegionRole::third_medium ? proxy_count(dim) : 0;
      const Eigen::MatrixXd X = reference_coords(kind);
      ElementLoad load;
      load.body_force = Vec3(0.1, -0.2, 0.3);
      load.heat_source = 0.5;
      double worst = 0.0;
      for (int s = 0; s < 5; ++s) {
        const ElementFields f = random_fields(kind, mat.role, rng);
        const ElementSystem sys = element_system(kind, 0, X, f, mat, load, {});
        const Eigen::MatrixXd K_fd = oracles::fd_jacobian(
            [&](const Eigen::VectorXd& x) {
              return element_residual(kind, 0, X, unflatten(x, n, dim, m), mat, load, {});
            },
            flatten(f));
        worst = std::max(worst, (sys.k - K_fd).norm() / sys.k.norm());
      }
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("fd tangent fallback agrees with the analytic tangent") {
  std::mt19937 rng(5);
  const ElementMaterial mat = medium_material();
  const ElementFields f = random_fields(ElementKind::Q1, mat.role, rng);
  const Eigen::MatrixXd X = reference_coords(ElementKind::Q1);
  ElementOptions fd;
  fd.fd_tangent = true;
  const ElementSystem a = element_system(ElementKind::Q1, 0, X, f, mat, {}, {});
  const ElementSystem b = element_system(ElementKind::Q1, 0, X, f, mat, {}, fd);
  CHECK((a.k - b.k).norm() / a.k.norm() < 1e-6);
  CHECK((a.r - b.r).norm() == 0.0);
}

TEST_CASE("conduction block is symmetric positive semidefinite") {
  std::mt19937 rng(6);
  const ElementMaterial mat = solid_material();
  const ElementFields f = random_fields(ElementKind::Q1, mat.role, rng);
  const Eigen::MatrixXd X = reference_coords(ElementKind::Q1);
  const ElementSystem sys = element_system(ElementKind::Q1, 0, X, f, mat, {}, {});
  Eigen::MatrixXd Ktt(4, 4);
  for (int I = 0; I < 4; ++I)
    for (int J = 0; J < 4; ++J) Ktt(I, J) = sys.k(I * 3 + 2, J * 3 + 2);
  CHECK((Ktt - Ktt.transpose()).norm() < 1e-12 * Ktt.norm());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ktt);
  CHECK(es.eigenvalues().minCoeff() > -1e-12 * Ktt.norm());
}

TEST_CASE("element inversion carries element and quadrature ids") {
  const ElementMaterial mat = solid_material();
  ElementFields f = zero_fields(ElementKind::Q1, mat.role);
  f.u(2, 0) = -1.5; // fold the element over
  f.u(2, 1) = -1.5;
  try {
    element_system(ElementKind::Q1, 7, reference_coords(ElementKind::Q1), f, mat, {}, {});
    FAIL("expected inversion");
  } catch (const ElementInversion& e) {
    CHECK(e.element == 7);
    CHECK(e.qp >= 0);
  }
}
