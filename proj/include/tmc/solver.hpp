#pragma once

#include "tmc/mesh.hpp"

#include <Eigen/Sparse>
#include <functional>
#include <iosfwd>
#include <optional>

namespace tmc {

/// Per-region constitutive data, aligned with mesh.regions.
struct MaterialTable {
  std::vector<ElementMaterial> by_region;
};

// Dirichlet components: 0..2 displacement axes, 3 temperature.
namespace dof_comp {
inline constexpr int ux = 0;
inline constexpr int uy = 1;
inline constexpr int uz = 2;
inline constexpr int T = 3;
}

struct DirichletItem {
  std::string node_set;
  int comp = dof_comp::uy;
  double value = 0.0; // applied as lambda * value
};

struct TractionItem {
  std::string node_set;
  Vec3 traction = Vec3::Zero(); // reference-configuration dead load
};

struct FluxItem {
  std::string node_set;
  double flux = 0.0; // prescribed normal heat flux q
};

struct RegionLoad {
  std::string region;
  Vec3 body_force = Vec3::Zero();
  double heat_source = 0.0;
};

struct SteppingControls {
  double dlambda0 = 0.1;
  double dlambda_min = 1e-5;
  double dlambda_max = 0.25;
  double growth = 1.5;
  int fast_iters = 6;
  int max_iters = 25;
  double tol_abs = 1e-8; // on the per-field scaled residual norm
  double tol_rel = 1e-10;
};

struct LoadProgram {
  std::vector<DirichletItem> dirichlet;
  std::vector<TractionItem> tractions;
  std::vector<FluxItem> fluxes;
  std::vector<RegionLoad> region_loads;
  SteppingControls stepping;
};

enum class FieldClass : int8_t { displacement = 0, temperature = 1, auxiliary = 2 };

/// Node-major, unknown-minor global numbering: per node (u_x..u_dim, theta,
/// p_1..p_m), with p allocated exactly on nodes incident to third-medium
/// elements.
struct DofMap {
  int dim = 2;
  int m = 0; // auxiliary fields per medium node
  int total = 0;
  std::vector<int> offset;
  std::vector<uint8_t> has_p;
  std::vector<int8_t> klass;       // FieldClass per dof
  std::vector<int8_t> comp;        // per-node component index per dof
  std::vector<uint8_t> constrained;
  std::vector<double> prescribed;  // full-load value per constrained dof
  std::vector<int> free_index;     // dof -> free position or -1
  std::vector<int> free_dofs;      // free position -> dof

  int n_free() const { return static_cast<int>(free_dofs.size()); }
  int dofs_per_node(int node) const { return dim + 1 + (has_p[node] ? m : 0); }
  /// comp: 0..dim-1 displacement, dim temperature, dim+1+i auxiliary. -1 if absent.
  int dof(int node, int comp) const {
    if (comp <= dim) return offset[node] + comp;
    return has_p[node] ? offset[node] + comp : -1;
  }
};

DofMap build_dof_map(const Mesh& mesh, const LoadProgram& program);

struct FieldState {
  Eigen::VectorXd x;
  double lambda = 0.0;
};

/// Sets every constrained entry to lambda * prescribed.
void apply_constraints(const DofMap& dofmap, double lambda, Eigen::VectorXd& x);

Vec3 node_displacement(const DofMap& dofmap, const Eigen::VectorXd& x, int node);
double node_temperature(const DofMap& dofmap, const Eigen::VectorXd& x, int node);

struct AssemblyOptions {
  ConductivityLaw law = ConductivityLaw::paper;
  bool fd_tangent = false;
  int threads = 1;
};

/// Boundary faces carrying Neumann data, resolved once per program.
struct NeumannFace {
  int element = 0;
  std::array<int, 4> nodes{};
  int n = 0;
  Vec3 traction = Vec3::Zero();
  double flux = 0.0;
};
std::vector<NeumannFace> build_neumann_faces(const Mesh& mesh, const LoadProgram& program);

struct AssembledSystem {
  Eigen::SparseMatrix<double> K; // free x free, nonsymmetric
  Eigen::VectorXd R;             // free
};

/// State-independent assembly data: cached shape evaluations, the fixed
/// sparsity pattern over free DOFs and per-element scatter slots into it.
struct AssemblyCache {
  std::vector<std::vector<ShapeEval>> shapes;
  std::vector<std::vector<int>> dofs;  // global dof list per element
  std::vector<std::vector<int>> slots; // nnz slot per element (i,j) pair, -1 skipped
  Eigen::SparseMatrix<double> pattern; // compressed, values zero
  std::vector<int> diag_slot;          // per free dof
};

AssemblyCache build_assembly_cache(const Mesh& mesh, const DofMap& dofmap,
                                   const MaterialTable& materials);

AssembledSystem assemble(const Mesh& mesh, const DofMap& dofmap, const MaterialTable& materials,
                         const FieldState& state, const LoadProgram& program,
                         const std::vector<NeumannFace>& faces, const AssemblyOptions& opts,
                         const AssemblyCache* cache = nullptr);

/// Residual over every DOF without constraint elimination; constrained rows
/// carry the discrete reactions.
Eigen::VectorXd assemble_residual_full(const Mesh& mesh, const DofMap& dofmap,
                                       const MaterialTable& materials, const FieldState& state,
                                       const LoadProgram& program,
                                       const std::vector<NeumannFace>& faces,
                                       const AssemblyOptions& opts);

/// Reference magnitudes making the mixed-unit residual comparable per field.
struct ResidualScales {
  double u = 1.0;
  double T = 1.0;
  double p = 1.0;
  double scaled_norm(const DofMap& dofmap, const Eigen::VectorXd& r_free) const;
};
ResidualScales residual_scales(const Mesh& mesh, const MaterialTable& materials,
                               const LoadProgram& program);

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double resid = 0.0;
  std::string reason;
  std::vector<double> residual_history; // scaled norm per iteration, element 0 is pre-solve
};

NewtonOutcome newton_solve(const Mesh& mesh, const DofMap& dofmap, const MaterialTable& materials,
                           const LoadProgram& program, const std::vector<NeumannFace>& faces,
                           const AssemblyOptions& opts, const ResidualScales& scales,
                           FieldState& state, double lambda_target,
                           const AssemblyCache* cache = nullptr);

struct StepRecord {
  int step = 0;
  double lambda = 0.0;
  double dlambda = 0.0;
  int iterations = 0;
  double resid = 0.0;
  double gap = 0.0;
};

struct SolveHistory {
  std::vector<StepRecord> steps;
  long total_iterations = 0;
  bool completed = false;
  double final_lambda = 0.0;
  std::string abort_reason;
};

struct AttemptResult {
  bool success = false;
  int iterations = 0;
  double resid = 0.0;
};

/// Adaptive stepping over the load factor: halve on failure, grow after fast
/// convergence, clip the final step to land exactly on lambda = 1.
SolveHistory continuation_loop(const SteppingControls& controls,
                               const std::function<AttemptResult(double)>& attempt,
                               const std::function<double()>& gap, std::ostream* log,
                               const std::function<void(const StepRecord&)>& on_accept = {});

/// Minimum deformed separation along `axis` between opposing node sets,
/// pairing each upper node with the transversally nearest lower node.
double measure_gap(const Mesh& mesh, const DofMap& dofmap, const Eigen::VectorXd& x,
                   const std::vector<int>& lower, const std::vector<int>& upper, int axis);

struct GapProbe {
  std::string lower;
  std::string upper;
  int axis = 1;
};

struct RunResult {
  FieldState state;
  SolveHistory history;
};

RunResult run_load_program(const Mesh& mesh, const MaterialTable& materials,
                           const LoadProgram& program, const AssemblyOptions& opts,
                           const std::optional<GapProbe>& gap_probe, std::ostream* log,
                           const std::function<void(const StepRecord&, const FieldState&)>&
                               on_accept = {});

} // namespace tmc
