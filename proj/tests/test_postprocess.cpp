#include "tmc/postprocess.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

using namespace tmc;

namespace {

Mesh single_quad_mesh() {
  Mesh mesh;
  mesh.dim = 2;
  mesh.X = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  mesh.regions.push_back({"solid", RegionRole::solid});
  MeshElement e;
  e.id = 0;
  e.kind = ElementKind::Q1;
  e.region = 0;
  e.nodes = {0, 1, 2, 3, 0, 0, 0, 0};
  mesh.elements = {e};
  mesh.node_sets.push_back({"bottom", {0, 1}});
  mesh.node_sets.push_back({"top", {2, 3}});
  return mesh;
}

MaterialTable solid_table(double K = 20.0, double mu = 10.0, double k = 2.0) {
  MaterialTable t;
  ElementMaterial m;
  m.role = RegionRole::solid;
  m.solid = {K, mu, 0.0, k, 0.0};
  t.by_region.push_back(m);
  return t;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

} // namespace

TEST_CASE("derived fields vanish in the reference state") {
  Mesh mesh = single_quad_mesh();
  const MaterialTable mats = solid_table();
  const DofMap dm = build_dof_map(mesh, LoadProgram{});
  FieldState st;
  st.x = Eigen::VectorXd::Zero(dm.total);
  const DerivedFields d = derive_fields(mesh, dm, st, mats);
  for (const auto& qp : d.per_element[0]) {
    CHECK(qp.sigma.norm() == 0.0);
    CHECK(qp.q.norm() == 0.0);
  }
  CHECK(d.solid.sigma.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform dilation gives the closed-form Cauchy stress") {
  Mesh mesh = single_quad_mesh();
  const MaterialTable mats = solid_table();
  const DofMap dm = build_dof_map(mesh, LoadProgram{});
  FieldState st;
  st.x = Eigen::VectorXd::Zero(dm.total);
  const double c = 1.1; // in-plane stretch; plane strain keeps F33 = 1
  for (int n = 0; n < 4; ++n) {
    st.x[dm.dof(n, 0)] = (c - 1.0) * mesh.X[n][0];
    st.x[dm.dof(n, 1)] = (c - 1.0) * mesh.X[n][1];
  }
  const DerivedFields d = derive_fields(mesh, dm, st, mats);
  // sigma = J^-1 F S F^T recomputed independently at each point
  Mat3 F = Mat3::Identity();
  F(0, 0) = F(1, 1) = c;
  const Kinematics kin = kinematic_state(F);
  const Mat3 S = solid_stress(kin, 0.0, mats.by_region[0].solid).S;
  const Mat3 sigma_exact = kin.F * S * kin.F.transpose() / kin.J;
  for (const auto& qp : d.per_element[0]) {
    CHECK((qp.sigma - sigma_exact).norm() < 1e-12 * sigma_exact.norm());
    CHECK(qp.pressure == doctest::Approx(-sigma_exact.trace() / 3.0).epsilon(1e-12));
  }
  // constant quadrature field reproduced exactly by nodal averaging
  for (int n = 0; n < 4; ++n)
    CHECK(d.solid.sigma(n, 0) == doctest::Approx(sigma_exact(0, 0)).epsilon(1e-13));
}

TEST_CASE("spatial heat flux under a linear temperature field") {
  Mesh mesh = single_quad_mesh();
  const MaterialTable mats = solid_table(20.0, 10.0, 2.0);
  const DofMap dm = build_dof_map(mesh, LoadProgram{});
  FieldState st;
  st.x = Eigen::VectorXd::Zero(dm.total);
  for (int n = 0; n < 4; ++n) st.x[dm.dof(n, 2)] = mesh.X[n][1]; // grad = (0, 1)
  const DerivedFields d = derive_fields(mesh, dm, st, mats);
  for (const auto& qp : d.per_element[0]) {
    CHECK(qp.q[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(qp.q[1] == doctest::Approx(-2.0).epsilon(1e-13));
  }
}

TEST_CASE("profile extraction interpolates nodal fields") {
  Mesh mesh = single_quad_mesh();
  const DofMap dm = build_dof_map(mesh, LoadProgram{});
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dm.total);
  SUBCASE("uniform field is constant") {
    for (int n = 0; n < 4; ++n) x[dm.dof(n, 2)] = 7.5;
    const auto prof = extract_profile(mesh, dm, x, Vec3(0.5, 0, 0), Vec3(0.5, 1, 0), 11,
                                      ProfileField::temperature);
    for (const auto& s : prof) {
      CHECK(s.found);
      CHECK(s.value == doctest::Approx(7.5).epsilon(1e-14));
    }
  }
  SUBCASE("linear field is reproduced at sample points") {
    for (int n = 0; n < 4; ++n) x[dm.dof(n, 2)] = 3.0 * mesh.X[n][1] - 1.0;
    const auto prof = extract_profile(mesh, dm, x, Vec3(0.25, 0, 0), Vec3(0.25, 1, 0), 9,
                                      ProfileField::temperature);
    for (const auto& s : prof) {
      CHECK(s.found);
      CHECK(s.value == doctest::Approx(3.0 * s.X[1] - 1.0).epsilon(1e-12));
    }
  }
  SUBCASE("samples outside the domain are reported missing") {
    const auto prof = extract_profile(mesh, dm, x, Vec3(0.5, 0.5, 0), Vec3(0.5, 2.5, 0), 5,
                                      ProfileField::temperature);
    CHECK(prof.front().found);
    CHECK(!prof.back().found);
  }
}

TEST_CASE("deformed positions follow the displacement field") {
  Mesh mesh = single_quad_mesh();
  const DofMap dm = build_dof_map(mesh, LoadProgram{});
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dm.total);
  for (int n = 0; n < 4; ++n) x[dm.dof(n, 1)] = -0.25 * mesh.X[n][1];
  const auto prof =
      extract_profile(mesh, dm, x, Vec3(0.5, 0, 0), Vec3(0.5, 1, 0), 3, ProfileField::uy);
  CHECK(prof.back().x[1] == doctest::Approx(0.75).epsilon(1e-13));
}

TEST_CASE("vtk export is structurally valid, deterministic and honors omit_medium") {
  PresetOptions opt;
  opt.nx = 4;
  opt.solid_layers = 4;
  opt.medium_layers = 2;
  Mesh mesh = generate_preset_mesh("block2d", opt);
  MaterialTable mats;
  ElementMaterial med;
  med.role = RegionRole::third_medium;
  med.medium.gamma = 1e-4;
  med.medium.k_tm = 1.0;
  med.medium.k_cap = 100.0;
  med.medium.d = 2.25;
  ElementMaterial sol;
  sol.role = RegionRole::solid;
  sol.solid = {20.0, 10.0, 0.0, 100.0, 0.0};
  mats.by_region = {med, sol};
  const DofMap dm = build_dof_map(mesh, LoadProgram{});
  FieldState st;
  st.x = Eigen::VectorXd::Zero(dm.total);
  const DerivedFields d = derive_fields(mesh, dm, st, mats);

  const std::string path = "test_block.vtk";
  export_vtk(mesh, dm, st, &d, path, {false, true});
  const std::string text = slurp(path);

  // legacy header and section structure
  CHECK(text.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(text.find("ASCII\n") != std::string::npos);
  CHECK(text.find("DATASET UNSTRUCTURED_GRID\n") != std::string::npos);
  std::istringstream in(text);
  std::string line;
  int points = 0, cells = 0, cell_list = 0, cell_types = 0, point_data = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "POINTS") ls >> points;
    if (tag == "CELLS") ls >> cells >> cell_list;
    if (tag == "CELL_TYPES") ls >> cell_types;
    if (tag == "POINT_DATA") ls >> point_data;
  }
  CHECK(points == mesh.n_nodes());
  CHECK(cells == static_cast<int>(mesh.elements.size()));
  CHECK(cell_list == cells * 5); // quads: 1 + 4 ids
  CHECK(cell_types == cells);
  CHECK(point_data == points);

  // deterministic bytes on re-export
  const std::string path2 = "test_block_again.vtk";
  export_vtk(mesh, dm, st, &d, path2, {false, true});
  CHECK(slurp(path2) == text);

  // medium cells omitted on request
  const std::string path3 = "test_block_solid_only.vtk";
  export_vtk(mesh, dm, st, &d, path3, {true, true});
  const std::string text3 = slurp(path3);
  std::istringstream in3(text3);
  int cells3 = 0;
  while (std::getline(in3, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "CELLS") ls >> cells3;
  }
  int solid_count = 0;
  for (const auto& e : mesh.elements)
    if (mesh.regions[e.region].role == RegionRole::solid) ++solid_count;
  CHECK(cells3 == solid_count);
  std::remove(path.c_str());
  std::remove(path2.c_str());
  std::remove(path3.c_str());
}

TEST_CASE("history export") {
  SolveHistory h;
  h.steps.push_back({1, 0.25, 0.25, 3, 1e-9, 0.1});
  const std::string path = "test_history.csv";
  export_history(h, path);
  std::ifstream in(path);
  std::string header, row, extra;
  REQUIRE(std::getline(in, header));
  CHECK(header == "step,lambda,dlambda,iterations,residual,gap");
  REQUIRE(std::getline(in, row));
  CHECK(!std::getline(in, extra));
  std::replace(row.begin(), row.end(), ',', ' ');
  std::istringstream rs(row);
  int step, iters;
  double lambda, dl, resid, gap;
  REQUIRE((rs >> step >> lambda >> dl >> iters >> resid >> gap));
  CHECK(step == 1);
  CHECK(lambda == 0.25);
  CHECK(gap == 0.1);
  std::remove(path.c_str());
}

TEST_CASE("thermal reactions balance across a conducting stack") {
  // pure conduction on a fixed mesh: heat entering the top equals heat
  // leaving the bottom
  Mesh mesh = single_quad_mesh();
  const MaterialTable mats = solid_table(20.0, 10.0, 3.0);
  LoadProgram program;
  program.dirichlet = {{"bottom", dof_comp::ux, 0.0}, {"bottom", dof_comp::uy, 0.0},
                       {"top", dof_comp::ux, 0.0},    {"top", dof_comp::uy, 0.0},
                       {"bottom", dof_comp::T, 0.0},  {"top", dof_comp::T, 10.0}};
  const DofMap dm = build_dof_map(mesh, program);
  const ResidualScales scales = residual_scales(mesh, mats, program);
  FieldState st;
  st.x = Eigen::VectorXd::Zero(dm.total);
  const NewtonOutcome res = newton_solve(mesh, dm, mats, program, {}, {}, scales, st, 1.0);
  REQUIRE(res.converged);
  const double bottom = thermal_reaction(mesh, dm, mats, st, program, {}, {}, "bottom");
  const double top = thermal_reaction(mesh, dm, mats, st, program, {}, {}, "top");
  CHECK(bottom + top == doctest::Approx(0.0).epsilon(1e-10));
  // conduction through unit square with k = 3 and dT = 10: flux magnitude 30
  CHECK(std::abs(bottom) == doctest::Approx(30.0).epsilon(1e-8));
}
