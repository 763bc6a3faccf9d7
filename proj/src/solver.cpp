#include "tmc/solver.hpp"

#include <Eigen/UmfPackSupport>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include <dlfcn.h>

namespace tmc {

namespace {
// The factorization calls BLAS; a multi-threaded BLAS pool oversubscribes
// the two-ish cores this runs on and costs 2x in the factorization. Pin it
// to one thread unless the user chose otherwise via OPENBLAS_NUM_THREADS.
struct BlasThreadDefault {
  BlasThreadDefault() {
#ifndef _WIN32
    if (std::getenv("OPENBLAS_NUM_THREADS") == nullptr) {
      using SetThreads = void (*)(int);
      if (auto f = reinterpret_cast<SetThreads>(dlsym(RTLD_DEFAULT, "openblas_set_num_threads")))
        f(1);
    }
#endif
  }
};
const BlasThreadDefault blas_thread_default;
} // namespace

DofMap build_dof_map(const Mesh& mesh, const LoadProgram& program) {
  DofMap dm;
  dm.dim = mesh.dim;
  dm.m = mesh.has_medium() ? proxy_count(mesh.dim) : 0;
  dm.has_p.assign(mesh.n_nodes(), 0);
  for (const auto& e : mesh.elements)
    if (mesh.regions[e.region].role == RegionRole::third_medium)
      for (int i = 0; i < e.n_nodes(); ++i) dm.has_p[e.nodes[i]] = 1;

  dm.offset.resize(mesh.n_nodes());
  int next = 0;
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    dm.offset[n] = next;
    next += dm.dofs_per_node(n);
  }
  dm.total = next;
  dm.klass.assign(dm.total, static_cast<int8_t>(FieldClass::displacement));
  dm.comp.assign(dm.total, 0);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    for (int c = 0; c < dm.dofs_per_node(n); ++c) dm.comp[dm.offset[n] + c] = static_cast<int8_t>(c);
    dm.klass[dm.offset[n] + dm.dim] = static_cast<int8_t>(FieldClass::temperature);
    if (dm.has_p[n])
      for (int i = 0; i < dm.m; ++i)
        dm.klass[dm.offset[n] + dm.dim + 1 + i] = static_cast<int8_t>(FieldClass::auxiliary);
  }

  dm.constrained.assign(dm.total, 0);
  dm.prescribed.assign(dm.total, 0.0);
  for (const auto& item : program.dirichlet) {
    const auto* set = mesh.find_node_set(item.node_set);
    if (!set) throw std::runtime_error("load program references unknown node set '" + item.node_set + "'");
    int comp;
    if (item.comp == dof_comp::T) {
      comp = dm.dim;
    } else if (item.comp >= 0 && item.comp < dm.dim) {
      comp = item.comp;
    } else {
      throw std::runtime_error("dirichlet component not available for mesh dimension " +
                               std::to_string(dm.dim));
    }
    for (int n : *set) {
      const int d = dm.dof(n, comp);
      if (dm.constrained[d] && dm.prescribed[d] != item.value)
        throw std::runtime_error("conflicting dirichlet values on node " + std::to_string(n));
      dm.constrained[d] = 1;
      dm.prescribed[d] = item.value;
    }
  }

  dm.free_index.assign(dm.total, -1);
  for (int d = 0; d < dm.total; ++d)
    if (!dm.constrained[d]) {
      dm.free_index[d] = static_cast<int>(dm.free_dofs.size());
      dm.free_dofs.push_back(d);
    }
  return dm;
}

void apply_constraints(const DofMap& dofmap, double lambda, Eigen::VectorXd& x) {
  for (int d = 0; d < dofmap.total; ++d)
    if (dofmap.constrained[d]) x[d] = lambda * dofmap.prescribed[d];
}

Vec3 node_displacement(const DofMap& dofmap, const Eigen::VectorXd& x, int node) {
  Vec3 u = Vec3::Zero();
  for (int i = 0; i < dofmap.dim; ++i) u[i] = x[dofmap.dof(node, i)];
  return u;
}

double node_temperature(const DofMap& dofmap, const Eigen::VectorXd& x, int node) {
  return x[dofmap.dof(node, dofmap.dim)];
}

namespace {

// Faces as (element-local node index lists) per kind.
const std::vector<std::vector<int>>& element_faces(ElementKind kind) {
  static const std::vector<std::vector<int>> t1 = {{0, 1}, {1, 2}, {2, 0}};
  static const std::vector<std::vector<int>> q1 = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  static const std::vector<std::vector<int>> h1 = {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                                   {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
  switch (kind) {
    case ElementKind::T1: return t1;
    case ElementKind::Q1: return q1;
    case ElementKind::H1: return h1;
  }
  return t1;
}

std::vector<char> node_set_mask(const Mesh& mesh, const std::string& name) {
  const auto* set = mesh.find_node_set(name);
  if (!set) throw std::runtime_error("load program references unknown node set '" + name + "'");
  std::vector<char> mask(mesh.n_nodes(), 0);
  for (int n : *set) mask[n] = 1;
  return mask;
}

} // namespace

std::vector<NeumannFace> build_neumann_faces(const Mesh& mesh, const LoadProgram& program) {
  std::vector<NeumannFace> out;
  if (program.tractions.empty() && program.fluxes.empty()) return out;

  // Boundary faces occur exactly once over all elements.
  std::map<std::vector<int>, int> face_count;
  for (const auto& e : mesh.elements)
    for (const auto& f : element_faces(e.kind)) {
      std::vector<int> key;
      for (int li : f) key.push_back(e.nodes[li]);
      std::sort(key.begin(), key.end());
      ++face_count[key];
    }

  auto collect = [&](const std::string& set_name, const Vec3& traction, double flux) {
    const auto mask = node_set_mask(mesh, set_name);
    for (const auto& e : mesh.elements)
      for (const auto& f : element_faces(e.kind)) {
        bool all_in = true;
        std::vector<int> key;
        for (int li : f) {
          key.push_back(e.nodes[li]);
          if (!mask[e.nodes[li]]) all_in = false;
        }
        if (!all_in) continue;
        std::sort(key.begin(), key.end());
        if (face_count.at(key) != 1) continue;
        NeumannFace nf;
        nf.element = e.id;
        nf.n = static_cast<int>(f.size());
        for (int i = 0; i < nf.n; ++i) nf.nodes[i] = e.nodes[f[i]];
        nf.traction = traction;
        nf.flux = flux;
        out.push_back(nf);
      }
  };
  for (const auto& t : program.tractions) collect(t.node_set, t.traction, 0.0);
  for (const auto& q : program.fluxes) collect(q.node_set, Vec3::Zero(), q.flux);
  return out;
}

namespace {

// Surface quadrature for dead loads: 2-pt Gauss on edges, 2x2 on quad faces.
void integrate_face(const Mesh& mesh, const NeumannFace& face, double lambda,
                    const DofMap& dofmap, Eigen::VectorXd& R_full) {
  const double g = 1.0 / std::sqrt(3.0);
  if (face.n == 2) {
    const Vec3 X0 = mesh.X[face.nodes[0]], X1 = mesh.X[face.nodes[1]];
    const double half_len = 0.5 * (X1 - X0).norm();
    for (double s : {-g, g}) {
      const double N0 = 0.5 * (1.0 - s), N1 = 0.5 * (1.0 + s);
      const double w = half_len; // unit weights
      const double Nv[2] = {N0, N1};
      for (int i = 0; i < 2; ++i) {
        for (int a = 0; a < dofmap.dim; ++a)
          R_full[dofmap.dof(face.nodes[i], a)] -= lambda * w * Nv[i] * face.traction[a];
        R_full[dofmap.dof(face.nodes[i], dofmap.dim)] -= lambda * w * Nv[i] * face.flux;
      }
    }
  } else {
    static const double xn[4] = {-1, 1, 1, -1};
    static const double yn[4] = {-1, -1, 1, 1};
    for (double sy : {-g, g})
      for (double sx : {-g, g}) {
        double N[4];
        Vec3 dXdx = Vec3::Zero(), dXdy = Vec3::Zero();
        for (int i = 0; i < 4; ++i) {
          N[i] = 0.25 * (1.0 + xn[i] * sx) * (1.0 + yn[i] * sy);
          const double dNx = 0.25 * xn[i] * (1.0 + yn[i] * sy);
          const double dNy = 0.25 * yn[i] * (1.0 + xn[i] * sx);
          dXdx += dNx * mesh.X[face.nodes[i]];
          dXdy += dNy * mesh.X[face.nodes[i]];
        }
        const double dA = dXdx.cross(dXdy).norm();
        for (int i = 0; i < 4; ++i) {
          for (int a = 0; a < dofmap.dim; ++a)
            R_full[dofmap.dof(face.nodes[i], a)] -= lambda * dA * N[i] * face.traction[a];
          R_full[dofmap.dof(face.nodes[i], dofmap.dim)] -= lambda * dA * N[i] * face.flux;
        }
      }
  }
}

struct ElementContext {
  std::vector<int> dofs;        // global dof per element dof
  ElementFields fields;
  ElementLoad load;
};

void gather_element(const DofMap& dofmap, const Eigen::VectorXd& x, const MeshElement& e,
                    const ElementMaterial& mat, const ElementLoad& load, ElementContext& ctx) {
  const int n = e.n_nodes();
  const int dim = dofmap.dim;
  const bool medium = mat.role == RegionRole::third_medium;
  const int m = medium ? dofmap.m : 0;
  const int dpn = dim + 1 + m;
  ctx.dofs.resize(static_cast<std::size_t>(n) * dpn);
  ctx.fields.u.resize(n, dim);
  ctx.fields.theta.resize(n);
  ctx.fields.p.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const int node = e.nodes[i];
    for (int a = 0; a < dim; ++a) {
      const int d = dofmap.dof(node, a);
      ctx.dofs[i * dpn + a] = d;
      ctx.fields.u(i, a) = x[d];
    }
    const int dt = dofmap.dof(node, dim);
    ctx.dofs[i * dpn + dim] = dt;
    ctx.fields.theta[i] = x[dt];
    for (int k = 0; k < m; ++k) {
      const int dp = dofmap.dof(node, dim + 1 + k);
      ctx.dofs[i * dpn + dim + 1 + k] = dp;
      ctx.fields.p(i, k) = x[dp];
    }
  }
  ctx.load = load;
}

std::vector<ElementLoad> region_loads_scaled(const Mesh& mesh, const LoadProgram& program,
                                             double lambda) {
  std::vector<ElementLoad> loads(mesh.regions.size());
  for (const auto& rl : program.region_loads) {
    const int r = mesh.find_region(rl.region);
    if (r < 0) throw std::runtime_error("load program references unknown region '" + rl.region + "'");
    loads[r].body_force = lambda * rl.body_force;
    loads[r].heat_source = lambda * rl.heat_source;
  }
  return loads;
}

void check_materials(const Mesh& mesh, const MaterialTable& materials) {
  if (materials.by_region.size() != mesh.regions.size())
    throw std::runtime_error("material table does not cover every mesh region");
  for (std::size_t r = 0; r < mesh.regions.size(); ++r)
    if (materials.by_region[r].role != mesh.regions[r].role)
      throw std::runtime_error("material role mismatch for region '" + mesh.regions[r].name + "'");
}

} // namespace

AssemblyCache build_assembly_cache(const Mesh& mesh, const DofMap& dofmap,
                                   const MaterialTable& materials) {
  check_materials(mesh, materials);
  AssemblyCache cache;
  const int nf = dofmap.n_free();
  cache.shapes.resize(mesh.elements.size());
  cache.dofs.resize(mesh.elements.size());

  // Structurally coupled dof-class pairs; theta-p and cross-proxy p blocks
  // never receive entries.
  auto coupled = [&](int da, int db) {
    const auto ca = static_cast<FieldClass>(dofmap.klass[da]);
    const auto cb = static_cast<FieldClass>(dofmap.klass[db]);
    if (ca == FieldClass::temperature && cb == FieldClass::auxiliary) return false;
    if (ca == FieldClass::auxiliary && cb == FieldClass::temperature) return false;
    if (ca == FieldClass::auxiliary && cb == FieldClass::auxiliary)
      return dofmap.comp[da] == dofmap.comp[db];
    return true;
  };

  std::vector<Eigen::Triplet<double>> pattern_triplets;
  for (const auto& e : mesh.elements) {
    cache.shapes[e.id] = element_shape_table(e.kind, mesh.element_coords(e));
    const ElementMaterial& mat = materials.by_region[e.region];
    const bool medium = mat.role == RegionRole::third_medium;
    const int m = medium ? dofmap.m : 0;
    const int dpn = dofmap.dim + 1 + m;
    auto& dofs = cache.dofs[e.id];
    dofs.resize(static_cast<std::size_t>(e.n_nodes()) * dpn);
    for (int i = 0; i < e.n_nodes(); ++i)
      for (int c = 0; c < dpn; ++c) dofs[i * dpn + c] = dofmap.dof(e.nodes[i], c);
    for (int i : dofs) {
      const int fi = dofmap.free_index[i];
      if (fi < 0) continue;
      for (int j : dofs) {
        const int fj = dofmap.free_index[j];
        if (fj < 0 || !coupled(i, j)) continue;
        pattern_triplets.emplace_back(fi, fj, 0.0);
      }
    }
  }
  cache.pattern.resize(nf, nf);
  cache.pattern.setFromTriplets(pattern_triplets.begin(), pattern_triplets.end());
  cache.pattern.makeCompressed();

  // Column-major slot lookup (row search within a column).
  auto find_slot = [&](int row, int col) -> int {
    const int* outer = cache.pattern.outerIndexPtr();
    const int* inner = cache.pattern.innerIndexPtr();
    const int* lo = inner + outer[col];
    const int* hi = inner + outer[col + 1];
    const int* it = std::lower_bound(lo, hi, row);
    if (it == hi || *it != row) return -1;
    return static_cast<int>(it - inner);
  };

  cache.slots.resize(mesh.elements.size());
  for (const auto& e : mesh.elements) {
    const auto& dofs = cache.dofs[e.id];
    auto& slots = cache.slots[e.id];
    slots.assign(dofs.size() * dofs.size(), -1);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const int fi = dofmap.free_index[dofs[i]];
      if (fi < 0) continue;
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        const int fj = dofmap.free_index[dofs[j]];
        if (fj < 0 || !coupled(dofs[i], dofs[j])) continue;
        slots[i * dofs.size() + j] = find_slot(fi, fj);
      }
    }
  }
  cache.diag_slot.resize(nf);
  for (int i = 0; i < nf; ++i) cache.diag_slot[i] = find_slot(i, i);
  return cache;
}

AssembledSystem assemble(const Mesh& mesh, const DofMap& dofmap, const MaterialTable& materials,
                         const FieldState& state, const LoadProgram& program,
                         const std::vector<NeumannFace>& faces, const AssemblyOptions& opts,
                         const AssemblyCache* cache) {
  check_materials(mesh, materials);
  AssemblyCache local_cache;
  if (!cache) {
    local_cache = build_assembly_cache(mesh, dofmap, materials);
    cache = &local_cache;
  }
  const auto loads = region_loads_scaled(mesh, program, state.lambda);
  const int nf = dofmap.n_free();
  const ElementOptions eopts{opts.law, opts.fd_tangent};
  const std::size_t nnz = static_cast<std::size_t>(cache->pattern.nonZeros());

  const int n_elems = static_cast<int>(mesh.elements.size());
  const int n_threads = std::max(1, std::min<int>(opts.threads, std::max(n_elems, 1)));

  std::vector<std::vector<double>> partial_vals(n_threads);
  std::vector<Eigen::VectorXd> partial_R(n_threads, Eigen::VectorXd::Zero(nf));
  std::vector<std::exception_ptr> errors(n_threads);

  auto worker = [&](int t, int begin, int end) {
    try {
      ElementContext ctx;
      partial_vals[t].assign(nnz, 0.0);
      auto& vals = partial_vals[t];
      auto& R = partial_R[t];
      for (int ei = begin; ei < end; ++ei) {
        const MeshElement& e = mesh.elements[ei];
        const ElementMaterial& mat = materials.by_region[e.region];
        gather_element(dofmap, state.x, e, mat, loads[e.region], ctx);
        const Eigen::MatrixXd Xe = mesh.element_coords(e);
        const ElementSystem sys =
            element_system(e.kind, e.id, Xe, cache->shapes[e.id], ctx.fields, mat, ctx.load, eopts);
        const int ndof = static_cast<int>(ctx.dofs.size());
        const auto& slots = cache->slots[e.id];
        for (int i = 0; i < ndof; ++i) {
          const int fi = dofmap.free_index[ctx.dofs[i]];
          if (fi < 0) continue;
          R[fi] += sys.r[i];
          for (int j = 0; j < ndof; ++j) {
            const int s = slots[i * ndof + j];
            if (s >= 0) vals[s] += sys.k(i, j);
          }
        }
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };

  if (n_threads == 1) {
    worker(0, 0, n_elems);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_elems + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back(worker, t, std::min(t * chunk, n_elems), std::min((t + 1) * chunk, n_elems));
    for (auto& th : pool) th.join();
  }
  for (int t = 0; t < n_threads; ++t)
    if (errors[t]) std::rethrow_exception(errors[t]);

  AssembledSystem out;
  out.R = Eigen::VectorXd::Zero(nf);
  for (int t = 0; t < n_threads; ++t) out.R += partial_R[t];
  out.K = cache->pattern;
  double* kv = out.K.valuePtr();
  for (int t = 0; t < n_threads; ++t) {
    const auto& vals = partial_vals[t];
    for (std::size_t s = 0; s < nnz; ++s) kv[s] += vals[s];
  }

  // Neumann dead loads enter the residual only.
  if (!faces.empty()) {
    Eigen::VectorXd R_full = Eigen::VectorXd::Zero(dofmap.total);
    for (const auto& f : faces) integrate_face(mesh, f, state.lambda, dofmap, R_full);
    for (int d = 0; d < dofmap.total; ++d) {
      const int fi = dofmap.free_index[d];
      if (fi >= 0) out.R[fi] += R_full[d];
    }
  }

  // Third-medium temperature rows lose every entry when the conductivity law
  // evaluates to zero at J = 1; those unknowns are indeterminate until the
  // medium deforms. Ground them with a unit diagonal (their residual is zero,
  // so the Newton update leaves them untouched).
  {
    std::vector<double> row_abs(nf, 0.0);
    const int* inner = out.K.innerIndexPtr();
    for (int col = 0; col < nf; ++col)
      for (int s = out.K.outerIndexPtr()[col]; s < out.K.outerIndexPtr()[col + 1]; ++s)
        row_abs[inner[s]] += std::abs(kv[s]);
    for (int i = 0; i < nf; ++i)
      if (row_abs[i] == 0.0) {
        const auto fc = static_cast<FieldClass>(dofmap.klass[dofmap.free_dofs[i]]);
        if (fc != FieldClass::temperature)
          throw std::runtime_error("assemble: empty row on a non-temperature dof");
        kv[cache->diag_slot[i]] = 1.0;
      }
  }
  return out;
}

Eigen::VectorXd assemble_residual_full(const Mesh& mesh, const DofMap& dofmap,
                                       const MaterialTable& materials, const FieldState& state,
                                       const LoadProgram& program,
                                       const std::vector<NeumannFace>& faces,
                                       const AssemblyOptions& opts) {
  check_materials(mesh, materials);
  const auto loads = region_loads_scaled(mesh, program, state.lambda);
  const ElementOptions eopts{opts.law, opts.fd_tangent};
  Eigen::VectorXd R = Eigen::VectorXd::Zero(dofmap.total);
  ElementContext ctx;
  for (const auto& e : mesh.elements) {
    const ElementMaterial& mat = materials.by_region[e.region];
    gather_element(dofmap, state.x, e, mat, loads[e.region], ctx);
    const Eigen::MatrixXd Xe = mesh.element_coords(e);
    const Eigen::VectorXd r = element_residual(e.kind, e.id, Xe, ctx.fields, mat, ctx.load, eopts);
    for (std::size_t i = 0; i < ctx.dofs.size(); ++i) R[ctx.dofs[i]] += r[i];
  }
  for (const auto& f : faces) integrate_face(mesh, f, state.lambda, dofmap, R);
  return R;
}

double ResidualScales::scaled_norm(const DofMap& dofmap, const Eigen::VectorXd& r_free) const {
  double norm = 0.0;
  for (int i = 0; i < r_free.size(); ++i) {
    const auto fc = static_cast<FieldClass>(dofmap.klass[dofmap.free_dofs[i]]);
    const double s = fc == FieldClass::displacement ? u : (fc == FieldClass::temperature ? T : p);
    norm = std::max(norm, std::abs(r_free[i]) / s);
  }
  return norm;
}

ResidualScales residual_scales(const Mesh& mesh, const MaterialTable& materials,
                               const LoadProgram& program) {
  double K_ref = 0.0, k_ref = 0.0;
  for (const auto& mat : materials.by_region) {
    if (mat.role == RegionRole::solid) {
      K_ref = std::max(K_ref, mat.solid.K);
      k_ref = std::max(k_ref, mat.solid.k_theta);
    }
  }
  for (const auto& mat : materials.by_region)
    if (mat.role == RegionRole::third_medium) {
      if (K_ref == 0.0) K_ref = mat.medium.gamma;
      if (k_ref == 0.0) k_ref = mat.medium.k_tm;
    }
  double dT = 0.0;
  for (const auto& item : program.dirichlet)
    if (item.comp == dof_comp::T) dT = std::max(dT, std::abs(item.value));
  const double d = domain_extent(mesh);
  ResidualScales s;
  s.u = std::max(K_ref * std::pow(d, mesh.dim - 1), 1e-300);
  s.T = std::max(k_ref * (dT > 0.0 ? dT : 1.0) * std::pow(d, mesh.dim - 2), 1e-300);
  s.p = 1.0;
  return s;
}

NewtonOutcome newton_solve(const Mesh& mesh, const DofMap& dofmap, const MaterialTable& materials,
                           const LoadProgram& program, const std::vector<NeumannFace>& faces,
                           const AssemblyOptions& opts, const ResidualScales& scales,
                           FieldState& state, double lambda_target, const AssemblyCache* cache) {
  NewtonOutcome out;
  state.lambda = lambda_target;
  apply_constraints(dofmap, lambda_target, state.x);

  AssemblyCache local_cache;
  if (!cache) {
    local_cache = build_assembly_cache(mesh, dofmap, materials);
    cache = &local_cache;
  }

  // Direct sparse LU with partial pivoting; the pattern is fixed, so the
  // symbolic analysis happens once per solve.
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;

  double r0 = -1.0;
  for (int it = 0; it <= program.stepping.max_iters; ++it) {
    AssembledSystem sys;
    try {
      sys = assemble(mesh, dofmap, materials, state, program, faces, opts, cache);
    } catch (const ElementInversion& e) {
      out.reason = e.what();
      return out;
    } catch (const DegenerateDistortion& e) {
      out.reason = e.what();
      return out;
    }
    const double rs = scales.scaled_norm(dofmap, sys.R);
    if (!std::isfinite(rs)) {
      out.reason = "non-finite residual";
      return out;
    }
    if (r0 < 0.0) r0 = rs;
    out.resid = rs;
    out.iterations = it;
    out.residual_history.push_back(rs);
    if (rs < program.stepping.tol_abs || (r0 > 0.0 && rs / r0 < program.stepping.tol_rel)) {
      out.converged = true;
      return out;
    }
    if (it == program.stepping.max_iters) break;

    if (!analyzed) {
      lu.analyzePattern(sys.K);
      analyzed = true;
    }
    lu.factorize(sys.K);
    if (lu.info() != Eigen::Success) {
      out.reason = "singular factorization";
      return out;
    }
    const Eigen::VectorXd rhs = -sys.R;
    const Eigen::VectorXd dx = lu.solve(rhs);
    if (!dx.allFinite()) {
      out.reason = "non-finite increment";
      return out;
    }
    for (int i = 0; i < dofmap.n_free(); ++i) state.x[dofmap.free_dofs[i]] += dx[i];
  }
  out.reason = "no convergence within max iterations";
  return out;
}

SolveHistory continuation_loop(const SteppingControls& controls,
                               const std::function<AttemptResult(double)>& attempt,
                               const std::function<double()>& gap, std::ostream* log,
                               const std::function<void(const StepRecord&)>& on_accept) {
  SolveHistory h;
  double lambda = 0.0;
  double dl = controls.dlambda0;
  int step = 1;
  while (lambda < 1.0) {
    const double target = std::min(lambda + dl, 1.0);
    const AttemptResult a = attempt(target);
    if (a.success) {
      StepRecord rec;
      rec.step = step++;
      rec.dlambda = target - lambda;
      lambda = target;
      rec.lambda = lambda;
      rec.iterations = a.iterations;
      rec.resid = a.resid;
      rec.gap = gap ? gap() : std::numeric_limits<double>::quiet_NaN();
      h.steps.push_back(rec);
      h.total_iterations += a.iterations;
      if (log)
        *log << "step " << rec.step << " lambda " << rec.lambda << " dlambda " << rec.dlambda
             << " iters " << rec.iterations << " resid " << rec.resid << " gap " << rec.gap
             << "\n";
      if (on_accept) on_accept(rec);
      if (a.iterations <= controls.fast_iters) dl = std::min(dl * controls.growth, controls.dlambda_max);
    } else {
      dl *= 0.5;
      if (log) *log << "  step back: dlambda " << dl << "\n";
      if (dl < controls.dlambda_min) {
        h.abort_reason = "load increment underflow at lambda " + std::to_string(lambda);
        h.final_lambda = lambda;
        return h;
      }
    }
  }
  h.completed = true;
  h.final_lambda = lambda;
  return h;
}

double measure_gap(const Mesh& mesh, const DofMap& dofmap, const Eigen::VectorXd& x,
                   const std::vector<int>& lower, const std::vector<int>& upper, int axis) {
  if (lower.empty() || upper.empty()) throw std::runtime_error("measure_gap: empty node set");
  std::vector<Vec3> lo(lower.size());
  for (std::size_t i = 0; i < lower.size(); ++i)
    lo[i] = mesh.X[lower[i]] + node_displacement(dofmap, x, lower[i]);
  double gap = std::numeric_limits<double>::infinity();
  for (int un : upper) {
    const Vec3 up = mesh.X[un] + node_displacement(dofmap, x, un);
    double best = std::numeric_limits<double>::infinity();
    double cand = 0.0;
    for (const auto& l : lo) {
      double t2 = 0.0;
      for (int a = 0; a < mesh.dim; ++a)
        if (a != axis) t2 += (up[a] - l[a]) * (up[a] - l[a]);
      if (t2 < best) {
        best = t2;
        cand = up[axis] - l[axis];
      }
    }
    gap = std::min(gap, cand);
  }
  return std::max(gap, 0.0);
}

RunResult run_load_program(const Mesh& mesh, const MaterialTable& materials,
                           const LoadProgram& program, const AssemblyOptions& opts,
                           const std::optional<GapProbe>& gap_probe, std::ostream* log,
                           const std::function<void(const StepRecord&, const FieldState&)>&
                               on_accept) {
  RunResult out;
  const DofMap dofmap = build_dof_map(mesh, program);
  const auto faces = build_neumann_faces(mesh, program);
  const ResidualScales scales = residual_scales(mesh, materials, program);
  const AssemblyCache cache = build_assembly_cache(mesh, dofmap, materials);
  out.state.x = Eigen::VectorXd::Zero(dofmap.total);
  out.state.lambda = 0.0;

  const std::vector<int>* gap_lower = nullptr;
  const std::vector<int>* gap_upper = nullptr;
  int gap_axis = 1;
  if (gap_probe) {
    gap_lower = mesh.find_node_set(gap_probe->lower);
    gap_upper = mesh.find_node_set(gap_probe->upper);
    if (!gap_lower || !gap_upper)
      throw std::runtime_error("gap probe references unknown node set");
    gap_axis = gap_probe->axis;
  }

  auto attempt = [&](double target) -> AttemptResult {
    const Eigen::VectorXd backup = out.state.x;
    const double lambda_backup = out.state.lambda;
    const NewtonOutcome res = newton_solve(mesh, dofmap, materials, program, faces, opts, scales,
                                           out.state, target, &cache);
    if (!res.converged) {
      out.state.x = backup;
      out.state.lambda = lambda_backup;
      if (log) *log << "  newton failed at lambda " << target << ": " << res.reason << "\n";
      return {false, res.iterations, res.resid};
    }
    return {true, res.iterations, res.resid};
  };
  auto gap_fn = [&]() -> double {
    if (!gap_lower) return std::numeric_limits<double>::quiet_NaN();
    return measure_gap(mesh, dofmap, out.state.x, *gap_lower, *gap_upper, gap_axis);
  };

  out.history = continuation_loop(
      program.stepping, attempt,
      gap_probe ? std::function<double()>(gap_fn) : std::function<double()>(), log,
      on_accept ? std::function<void(const StepRecord&)>(
                      [&](const StepRecord& rec) { on_accept(rec, out.state); })
                : std::function<void(const StepRecord&)>());
  return out;
}

} // namespace tmc
