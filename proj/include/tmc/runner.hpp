#pragma once

#include "tmc/config.hpp"

#include <iosfwd>

namespace tmc {

// Process exit codes shared by the CLI and the test drivers.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 2;
inline constexpr int solver_abort = 3;
inline constexpr int property_failure = 4;
}

struct RunOutcome {
  int exit = exit_code::ok;
  SolveHistory history;
  double final_gap = 0.0;
  int dofs = 0;
  int free_dofs = 0;
  std::string summary_path;
};

/// Executes a load program end to end and writes the requested artifacts
/// (summary, history CSV, VTK, profiles, snapshot) under config.out_dir.
RunOutcome run_problem(const RunConfig& config, std::ostream& log);

/// Runs the independent property suites; prints one PASS/FAIL line per
/// property. `only` filters by group name prefix; empty runs everything.
int verify_properties(const std::string& only, std::ostream& out);

struct Snapshot {
  Mesh mesh;
  MaterialTable materials;
  FieldState state;
  ConductivityLaw law = ConductivityLaw::paper;
};

void save_snapshot(const Snapshot& snap, const std::string& path);
Snapshot load_snapshot(const std::string& path);

/// Re-derives fields from a snapshot and writes a VTK file.
int export_snapshot_vtk(const std::string& snapshot_path, const std::string& vtk_path,
                        bool omit_medium, std::ostream& log);

} // namespace tmc
