#include "tmc/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace tmc {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_profile_csv(const std::string& path, const std::vector<ProfileSample>& samples,
                       int dim) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << (dim == 2 ? "s,X0,X1,x0,x1,value,found\n" : "s,X0,X1,X2,x0,x1,x2,value,found\n");
  for (const auto& s : samples) {
    out << fmt(s.s);
    for (int a = 0; a < dim; ++a) out << ',' << fmt(s.X[a]);
    for (int a = 0; a < dim; ++a) out << ',' << fmt(s.x[a]);
    out << ',' << fmt(s.value) << ',' << (s.found ? 1 : 0) << "\n";
  }
}

} // namespace

RunOutcome run_problem(const RunConfig& config, std::ostream& log) {
  RunOutcome out;

  // Everything failing up to the first solve is a validation error.
  Mesh mesh;
  MaterialTable materials;
  DofMap dofmap;
  try {
    mesh = build_problem_mesh(config);
    materials = resolve_materials(mesh, config);
    dofmap = build_dof_map(mesh, config.program);
    if (config.gap) {
      if (!mesh.find_node_set(config.gap->lower) || !mesh.find_node_set(config.gap->upper))
        throw ConfigError("gap probe references unknown node set");
      if (config.gap->axis >= mesh.dim) throw ConfigError("gap axis outside mesh dimension");
    }
  } catch (const std::exception& e) {
    log << "validation error: " << e.what() << "\n";
    out.exit = exit_code::validation;
    return out;
  }
  out.dofs = dofmap.total;
  out.free_dofs = dofmap.n_free();

  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const auto artifact = [&](const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
  };

  const auto t0 = std::chrono::steady_clock::now();
  RunResult rr;
  const auto on_accept = [&](const StepRecord& rec, const FieldState& state) {
    if (config.vtk == VtkMode::steps) {
      const DerivedFields derived = derive_fields(mesh, dofmap, state, materials, config.solver.law);
      char name[32];
      std::snprintf(name, sizeof name, "step_%04d.vtk", rec.step);
      export_vtk(mesh, dofmap, state, &derived, artifact(name),
                 {config.omit_medium, true});
    }
  };
  try {
    rr = run_load_program(mesh, materials, config.program, config.solver, config.gap, &log,
                          on_accept);
  } catch (const std::exception& e) {
    log << "solver error: " << e.what() << "\n";
    out.exit = exit_code::solver_abort;
    return out;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.history = rr.history;

  if (config.gap) {
    out.final_gap = measure_gap(mesh, dofmap, rr.state.x, *mesh.find_node_set(config.gap->lower),
                                *mesh.find_node_set(config.gap->upper), config.gap->axis);
  } else {
    out.final_gap = std::numeric_limits<double>::quiet_NaN();
  }

  if (config.write_history) export_history(rr.history, artifact("history.csv"));

  if (config.vtk != VtkMode::off) {
    const DerivedFields derived = derive_fields(mesh, dofmap, rr.state, materials, config.solver.law);
    export_vtk(mesh, dofmap, rr.state, &derived, artifact("solution.vtk"),
               {config.omit_medium, true});
  }

  for (const auto& p : config.profiles) {
    const auto samples = extract_profile(mesh, dofmap, rr.state.x, p.start, p.end, p.samples, p.field);
    write_profile_csv(artifact("profile_" + p.name + ".csv"), samples, mesh.dim);
  }

  if (config.write_snapshot) {
    Snapshot snap;
    snap.mesh = mesh;
    snap.materials = materials;
    snap.state = rr.state;
    snap.law = config.solver.law;
    save_snapshot(snap, artifact("state.snap"));
  }

  if (config.write_summary) {
    std::ofstream sm(artifact("summary.txt"));
    sm << "status " << (rr.history.completed ? "converged" : "aborted") << "\n";
    sm << "problem " << (config.preset.empty() ? config.mesh_path : config.preset) << "\n";
    sm << "dim " << mesh.dim << "\n";
    sm << "elements " << mesh.elements.size() << "\n";
    sm << "nodes " << mesh.n_nodes() << "\n";
    sm << "dofs " << dofmap.total << "\n";
    sm << "free_dofs " << dofmap.n_free() << "\n";
    sm << "steps " << rr.history.steps.size() << "\n";
    sm << "iterations " << rr.history.total_iterations << "\n";
    sm << "final_lambda " << fmt(rr.history.completed ? 1.0 : rr.history.final_lambda) << "\n";
    sm << "final_gap " << fmt(out.final_gap) << "\n";
    if (!rr.history.completed) sm << "abort_reason " << rr.history.abort_reason << "\n";
    out.summary_path = artifact("summary.txt");
  }
  {
    // Wall time lives outside the summary so reruns stay byte-identical.
    std::ofstream tm(artifact("timing.txt"));
    tm << "wall_time_s " << std::fixed << std::setprecision(3) << wall << "\n";
  }

  if (!rr.history.completed) {
    log << "aborted: " << rr.history.abort_reason << "\n";
    out.exit = exit_code::solver_abort;
  }
  return out;
}

namespace {

const char* law_name(ConductivityLaw law) {
  return law == ConductivityLaw::paper ? "paper" : "floored";
}

} // namespace

void save_snapshot(const Snapshot& snap, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "snapshot 1\n";
  out << "lambda " << fmt(snap.state.lambda) << "\n";
  out << "conductivity_law " << law_name(snap.law) << "\n";
  for (std::size_t r = 0; r < snap.mesh.regions.size(); ++r) {
    const auto& mat = snap.materials.by_region[r];
    out << "material " << snap.mesh.regions[r].name << ' ';
    if (mat.role == RegionRole::solid) {
      out << "solid " << fmt(mat.solid.K) << ' ' << fmt(mat.solid.mu) << ' '
          << fmt(mat.solid.alpha_t) << ' ' << fmt(mat.solid.k_theta) << ' '
          << fmt(mat.solid.theta0) << "\n";
    } else {
      out << "third_medium " << fmt(mat.medium.gamma) << ' ' << fmt(mat.medium.alpha_tm) << ' '
          << fmt(mat.medium.k_tm) << ' ' << fmt(mat.medium.k_cap) << ' ' << fmt(mat.medium.beta1)
          << ' ' << fmt(mat.medium.beta2) << ' ' << fmt(mat.medium.theta0) << ' '
          << fmt(mat.medium.d) << "\n";
    }
  }
  out << "mesh_begin\n";
  save_mesh(snap.mesh, out);
  out << "mesh_end\n";
  const DofMap dofmap = build_dof_map(snap.mesh, LoadProgram{});
  for (int n = 0; n < snap.mesh.n_nodes(); ++n) {
    out << "node_state " << n;
    for (int c = 0; c < dofmap.dofs_per_node(n); ++c)
      out << ' ' << fmt(snap.state.x[dofmap.offset[n] + c]);
    out << "\n";
  }
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot '" + path + "'");
  Snapshot snap;
  std::string line;
  if (!std::getline(in, line) || line != "snapshot 1")
    throw std::runtime_error("not a snapshot file: " + path);

  struct RawMaterial {
    std::string region;
    ElementMaterial mat;
  };
  std::vector<RawMaterial> raw_materials;
  std::ostringstream mesh_text;
  bool in_mesh = false, have_mesh = false;
  double lambda = 0.0;
  std::vector<std::pair<int, std::vector<double>>> node_states;

  while (std::getline(in, line)) {
    if (line == "mesh_begin") {
      in_mesh = true;
      continue;
    }
    if (line == "mesh_end") {
      in_mesh = false;
      have_mesh = true;
      continue;
    }
    if (in_mesh) {
      mesh_text << line << "\n";
      continue;
    }
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "lambda") {
      ls >> lambda;
    } else if (tag == "conductivity_law") {
      std::string law;
      ls >> law;
      snap.law = law == "floored" ? ConductivityLaw::floored : ConductivityLaw::paper;
    } else if (tag == "material") {
      RawMaterial rm;
      std::string role;
      ls >> rm.region >> role;
      if (role == "solid") {
        rm.mat.role = RegionRole::solid;
        ls >> rm.mat.solid.K >> rm.mat.solid.mu >> rm.mat.solid.alpha_t >> rm.mat.solid.k_theta >>
            rm.mat.solid.theta0;
      } else {
        rm.mat.role = RegionRole::third_medium;
        ls >> rm.mat.medium.gamma >> rm.mat.medium.alpha_tm >> rm.mat.medium.k_tm >>
            rm.mat.medium.k_cap >> rm.mat.medium.beta1 >> rm.mat.medium.beta2 >>
            rm.mat.medium.theta0 >> rm.mat.medium.d;
      }
      if (!ls) throw std::runtime_error("snapshot: malformed material line");
      raw_materials.push_back(rm);
    } else if (tag == "node_state") {
      int id;
      if (!(ls >> id)) throw std::runtime_error("snapshot: malformed node_state line");
      std::vector<double> vals;
      double v;
      while (ls >> v) vals.push_back(v);
      node_states.emplace_back(id, std::move(vals));
    } else {
      throw std::runtime_error("snapshot: unknown directive '" + tag + "'");
    }
  }
  if (!have_mesh) throw std::runtime_error("snapshot: missing mesh block");
  std::istringstream mesh_in(mesh_text.str());
  snap.mesh = load_mesh(mesh_in);

  snap.materials.by_region.resize(snap.mesh.regions.size());
  std::vector<char> seen(snap.mesh.regions.size(), 0);
  for (const auto& rm : raw_materials) {
    const int r = snap.mesh.find_region(rm.region);
    if (r < 0) throw std::runtime_error("snapshot: material for unknown region '" + rm.region + "'");
    snap.materials.by_region[r] = rm.mat;
    seen[r] = 1;
  }
  for (std::size_t r = 0; r < seen.size(); ++r)
    if (!seen[r])
      throw std::runtime_error("snapshot: missing material for region '" +
                               snap.mesh.regions[r].name + "'");

  const DofMap dofmap = build_dof_map(snap.mesh, LoadProgram{});
  snap.state.x = Eigen::VectorXd::Zero(dofmap.total);
  snap.state.lambda = lambda;
  std::vector<char> filled(snap.mesh.n_nodes(), 0);
  for (const auto& [id, vals] : node_states) {
    if (id < 0 || id >= snap.mesh.n_nodes())
      throw std::runtime_error("snapshot: node_state for undefined node");
    if (static_cast<int>(vals.size()) != dofmap.dofs_per_node(id))
      throw std::runtime_error("snapshot: node_state value count mismatch on node " +
                               std::to_string(id));
    for (std::size_t c = 0; c < vals.size(); ++c) snap.state.x[dofmap.offset[id] + c] = vals[c];
    filled[id] = 1;
  }
  for (int n = 0; n < snap.mesh.n_nodes(); ++n)
    if (!filled[n]) throw std::runtime_error("snapshot: missing node_state for node " + std::to_string(n));
  return snap;
}

int export_snapshot_vtk(const std::string& snapshot_path, const std::string& vtk_path,
                        bool omit_medium, std::ostream& log) {
  Snapshot snap;
  try {
    snap = load_snapshot(snapshot_path);
  } catch (const std::exception& e) {
    log << "validation error: " << e.what() << "\n";
    return exit_code::validation;
  }
  const DofMap dofmap = build_dof_map(snap.mesh, LoadProgram{});
  const DerivedFields derived = derive_fields(snap.mesh, dofmap, snap.state, snap.materials, snap.law);
  export_vtk(snap.mesh, dofmap, snap.state, &derived, vtk_path, {omit_medium, true});
  return exit_code::ok;
}

} // namespace tmc
