#include "tmc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace tmc {

int Mesh::find_region(const std::string& name) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].name == name) return static_cast<int>(i);
  return -1;
}

const std::vector<int>* Mesh::find_node_set(const std::string& name) const {
  for (const auto& [n, ids] : node_sets)
    if (n == name) return &ids;
  return nullptr;
}

bool Mesh::has_medium() const {
  for (const auto& r : regions)
    if (r.role == RegionRole::third_medium) return true;
  return false;
}

Eigen::MatrixXd Mesh::element_coords(const MeshElement& e) const {
  Eigen::MatrixXd Xe(e.n_nodes(), dim);
  for (int i = 0; i < e.n_nodes(); ++i)
    for (int a = 0; a < dim; ++a) Xe(i, a) = X[e.nodes[i]][a];
  return Xe;
}

void validate_mesh(const Mesh& mesh) {
  if (mesh.dim != 2 && mesh.dim != 3) throw std::runtime_error("mesh: dim must be 2 or 3");
  std::vector<char> used(mesh.X.size(), 0);
  for (const auto& e : mesh.elements) {
    if (element_dim(e.kind) != mesh.dim)
      throw std::runtime_error("mesh: element " + std::to_string(e.id) + " kind " +
                               element_kind_name(e.kind) + " inconsistent with dim " +
                               std::to_string(mesh.dim));
    if (e.region < 0 || e.region >= static_cast<int>(mesh.regions.size()))
      throw std::runtime_error("mesh: element " + std::to_string(e.id) + " has undefined region");
    for (int i = 0; i < e.n_nodes(); ++i) {
      const int n = e.nodes[i];
      if (n < 0 || n >= mesh.n_nodes())
        throw std::runtime_error("mesh: element " + std::to_string(e.id) + " references undefined node " +
                                 std::to_string(n));
      used[n] = 1;
    }
    const Eigen::MatrixXd Xe = mesh.element_coords(e);
    for (const auto& qp : quadrature(e.kind)) {
      try {
        shape_eval(e.kind, qp.xi, Xe);
      } catch (const std::exception&) {
        throw std::runtime_error("mesh: element " + std::to_string(e.id) +
                                 " has non-positive reference Jacobian");
      }
    }
  }
  if (!mesh.elements.empty())
    for (std::size_t n = 0; n < used.size(); ++n)
      if (!used[n]) throw std::runtime_error("mesh: orphan node " + std::to_string(n));
  for (const auto& [name, ids] : mesh.node_sets)
    for (int n : ids)
      if (n < 0 || n >= mesh.n_nodes())
        throw std::runtime_error("mesh: node set '" + name + "' references undefined node " +
                                 std::to_string(n));
  for (const auto& x : mesh.X)
    if (!x.allFinite()) throw std::runtime_error("mesh: non-finite node coordinates");
}

double domain_extent(const Mesh& mesh) {
  if (mesh.X.empty()) throw std::runtime_error("domain_extent: empty mesh");
  Vec3 lo = mesh.X.front(), hi = mesh.X.front();
  for (const auto& x : mesh.X) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  double d = 0.0;
  for (int a = 0; a < mesh.dim; ++a) d = std::max(d, hi[a] - lo[a]);
  return d;
}

namespace {

// Structured 2D grid whose rows follow per-band surface functions. Bands are
// stacked bottom to top and share interface rows.
struct Band2d {
  std::string region;
  RegionRole role;
  int layers;
  std::function<double(double)> y_bottom;
  std::function<double(double)> y_top;
};

Mesh build_layered_2d(int nx, double width, const std::vector<Band2d>& bands, ElementKind kind) {
  if (nx < 1) throw std::runtime_error("preset: zero resolution");
  for (const auto& b : bands)
    if (b.layers < 1) throw std::runtime_error("preset: zero resolution");
  Mesh mesh;
  mesh.dim = 2;
  int total_rows = 0;
  for (const auto& b : bands) total_rows += b.layers;

  // Row-major node ids: id = row * ncols + col.
  const int ncols = nx + 1;
  std::vector<double> xs(ncols);
  for (int j = 0; j < ncols; ++j) xs[j] = width * static_cast<double>(j) / nx;

  mesh.X.resize(static_cast<std::size_t>(ncols) * (total_rows + 1));
  int row = 0;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto& band = bands[b];
    const int r0 = (b == 0) ? 0 : 1; // interface row already written by the band below
    for (int r = r0; r <= band.layers; ++r) {
      const int grow = row + r;
      for (int j = 0; j < ncols; ++j) {
        const double x = xs[j];
        const double yb = band.y_bottom(x);
        const double yt = band.y_top(x);
        const double y = yb + (yt - yb) * static_cast<double>(r) / band.layers;
        mesh.X[static_cast<std::size_t>(grow) * ncols + j] = Vec3(x, y, 0.0);
      }
    }
    row += band.layers;
  }

  for (const auto& b : bands) mesh.regions.push_back({b.region, b.role});

  int eid = 0;
  row = 0;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const int reg = static_cast<int>(b);
    for (int r = 0; r < bands[b].layers; ++r) {
      for (int j = 0; j < nx; ++j) {
        const int ll = (row + r) * ncols + j;
        const int lr = ll + 1;
        const int ul = ll + ncols;
        const int ur = ul + 1;
        if (kind == ElementKind::Q1) {
          MeshElement e;
          e.id = eid++;
          e.kind = ElementKind::Q1;
          e.region = reg;
          e.nodes = {ll, lr, ur, ul, 0, 0, 0, 0};
          mesh.elements.push_back(e);
        } else {
          // Fixed lower-left to upper-right diagonal.
          MeshElement e1;
          e1.id = eid++;
          e1.kind = ElementKind::T1;
          e1.region = reg;
          e1.nodes = {ll, lr, ur, 0, 0, 0, 0, 0};
          mesh.elements.push_back(e1);
          MeshElement e2;
          e2.id = eid++;
          e2.kind = ElementKind::T1;
          e2.region = reg;
          e2.nodes = {ll, ur, ul, 0, 0, 0, 0, 0};
          mesh.elements.push_back(e2);
        }
      }
    }
    row += bands[b].layers;
  }
  return mesh;
}

std::vector<int> grid_row_2d(int nx, int row) {
  std::vector<int> ids(nx + 1);
  for (int j = 0; j <= nx; ++j) ids[j] = row * (nx + 1) + j;
  return ids;
}

// Gap tracking skips the lateral boundary columns: the medium extrudes
// sideways at free edges, which makes the corner separation a mesh-dependent
// concentration rather than the interface gap.
std::vector<int> grid_row_2d_interior(int nx, int row) {
  std::vector<int> ids;
  for (int j = 1; j < nx; ++j) ids.push_back(row * (nx + 1) + j);
  return ids;
}

std::vector<int> grid_sides_2d(int nx, int total_rows) {
  std::vector<int> ids;
  for (int r = 0; r <= total_rows; ++r) {
    ids.push_back(r * (nx + 1));
    ids.push_back(r * (nx + 1) + nx);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct Band3d {
  std::string region;
  RegionRole role;
  int layers;
  double z0, z1;
};

Mesh build_layered_3d(int nx, int ny, double wx, double wy, const std::vector<Band3d>& bands) {
  if (nx < 1 || ny < 1) throw std::runtime_error("preset: zero resolution");
  for (const auto& b : bands)
    if (b.layers < 1) throw std::runtime_error("preset: zero resolution");
  Mesh mesh;
  mesh.dim = 3;
  int total_layers = 0;
  for (const auto& b : bands) total_layers += b.layers;
  const int npx = nx + 1, npy = ny + 1;
  const int plane = npx * npy;
  mesh.X.resize(static_cast<std::size_t>(plane) * (total_layers + 1));

  int layer = 0;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto& band = bands[b];
    const int k0 = (b == 0) ? 0 : 1;
    for (int k = k0; k <= band.layers; ++k) {
      const double z = band.z0 + (band.z1 - band.z0) * static_cast<double>(k) / band.layers;
      const int gk = layer + k;
      for (int j = 0; j < npy; ++j)
        for (int i = 0; i < npx; ++i)
          mesh.X[static_cast<std::size_t>(gk) * plane + j * npx + i] =
              Vec3(wx * static_cast<double>(i) / nx, wy * static_cast<double>(j) / ny, z);
    }
    layer += band.layers;
  }

  for (const auto& b : bands) mesh.regions.push_back({b.region, b.role});

  int eid = 0;
  layer = 0;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const int reg = static_cast<int>(b);
    for (int k = 0; k < bands[b].layers; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const int base = (layer + k) * plane + j * npx + i;
          const int up = base + plane;
          MeshElement e;
          e.id = eid++;
          e.kind = ElementKind::H1;
          e.region = reg;
          e.nodes = {base,     base + 1,     base + npx + 1,     base + npx,
                     up,       up + 1,       up + npx + 1,       up + npx};
          mesh.elements.push_back(e);
        }
    layer += bands[b].layers;
  }
  return mesh;
}

std::vector<int> grid_plane_3d(int nx, int ny, int layer) {
  const int plane = (nx + 1) * (ny + 1);
  std::vector<int> ids(plane);
  for (int p = 0; p < plane; ++p) ids[p] = layer * plane + p;
  return ids;
}

int preset_default(int value, int fallback) { return value < 0 ? fallback : value; }

} // namespace

Mesh generate_preset_mesh(const std::string& preset, const PresetOptions& opt) {
  Mesh mesh;
  if (preset == "block2d") {
    const int nx = preset_default(opt.nx, 32);
    const int sl = preset_default(opt.solid_layers, 32);
    const int ml = preset_default(opt.medium_layers, 8);
    const ElementKind kind = opt.kind_set ? opt.kind2d : ElementKind::Q1;
    const double hm = 0.25, hs = 2.0;
    auto flat = [](double y) {
      return [y](double) { return y; };
    };
    mesh = build_layered_2d(nx, 1.0,
                            {{"medium", RegionRole::third_medium, ml, flat(0.0), flat(hm)},
                             {"solid", RegionRole::solid, sl, flat(hm), flat(hm + hs)}},
                            kind);
    const int rows = ml + sl;
    mesh.node_sets.push_back({"bottom", grid_row_2d(nx, 0)});
    mesh.node_sets.push_back({"top", grid_row_2d(nx, rows)});
    mesh.node_sets.push_back({"sides", grid_sides_2d(nx, rows)});
    mesh.node_sets.push_back({"loaded_patch", grid_row_2d(nx, rows)});
    mesh.node_sets.push_back({"gap_lower", grid_row_2d_interior(nx, 0)});
    mesh.node_sets.push_back({"gap_upper", grid_row_2d_interior(nx, ml)});
  } else if (preset == "two_blocks2d") {
    const int nx = preset_default(opt.nx, 64);
    const int sl = preset_default(opt.solid_layers, 32);
    const int ul = preset_default(opt.upper_layers, sl);
    const int ml = preset_default(opt.medium_layers, 8);
    if (nx % 2 != 0) throw std::runtime_error("two_blocks2d: nx must be even (half-width patch)");
    const ElementKind kind = opt.kind_set ? opt.kind2d : ElementKind::T1;
    auto flat = [](double y) {
      return [y](double) { return y; };
    };
    mesh = build_layered_2d(nx, 2.0,
                            {{"lower", RegionRole::solid, sl, flat(0.0), flat(1.0)},
                             {"medium", RegionRole::third_medium, ml, flat(1.0), flat(1.25)},
                             {"upper", RegionRole::solid, ul, flat(1.25), flat(2.25)}},
                            kind);
    const int rows = sl + ml + ul;
    mesh.node_sets.push_back({"bottom", grid_row_2d(nx, 0)});
    mesh.node_sets.push_back({"top", grid_row_2d(nx, rows)});
    mesh.node_sets.push_back({"sides", grid_sides_2d(nx, rows)});
    std::vector<int> patch;
    for (int j = nx / 2; j <= nx; ++j) patch.push_back(rows * (nx + 1) + j);
    mesh.node_sets.push_back({"loaded_patch", patch});
    mesh.node_sets.push_back({"gap_lower", grid_row_2d_interior(nx, sl)});
    mesh.node_sets.push_back({"gap_upper", grid_row_2d_interior(nx, sl + ml)});
  } else if (preset == "wavy_interface2d") {
    const int nx = preset_default(opt.nx, 48);
    const int sl = preset_default(opt.solid_layers, 10);
    const int ul = preset_default(opt.upper_layers, sl);
    const int ml = preset_default(opt.medium_layers, 4);
    const double amp = opt.amplitude >= 0.0 ? opt.amplitude : 0.15;
    const double gap0 = opt.gap0 >= 0.0 ? opt.gap0 : 0.1;
    const int waves = preset_default(opt.halfwaves, 3);
    if (!(amp > 0.0) || !(gap0 > 0.0) || waves < 1)
      throw std::runtime_error("wavy_interface2d: needs positive amplitude, gap0 and halfwaves");
    const ElementKind kind = opt.kind_set ? opt.kind2d : ElementKind::Q1;
    const double h_low = 0.5, h_up = 0.5;
    const double y_flat = h_low + amp + gap0;
    auto y_wavy = [h_low, amp, waves](double x) {
      return h_low + amp * std::sin(waves * M_PI * x);
    };
    auto flat = [](double y) {
      return [y](double) { return y; };
    };
    mesh = build_layered_2d(nx, 1.0,
                            {{"lower", RegionRole::solid, sl, flat(0.0), y_wavy},
                             {"medium", RegionRole::third_medium, ml, y_wavy, flat(y_flat)},
                             {"upper", RegionRole::solid, ul, flat(y_flat), flat(y_flat + h_up)}},
                            kind);
    const int rows = sl + ml + ul;
    mesh.node_sets.push_back({"bottom", grid_row_2d(nx, 0)});
    mesh.node_sets.push_back({"top", grid_row_2d(nx, rows)});
    mesh.node_sets.push_back({"sides", grid_sides_2d(nx, rows)});
    mesh.node_sets.push_back({"loaded_patch", grid_row_2d(nx, rows)});
    mesh.node_sets.push_back({"gap_lower", grid_row_2d_interior(nx, sl)});
    mesh.node_sets.push_back({"gap_upper", grid_row_2d_interior(nx, sl + ml)});
  } else if (preset == "block_plate3d") {
    const int nx = preset_default(opt.nx, 8);
    if (nx % 4 != 0) throw std::runtime_error("block_plate3d: nx must be a multiple of 4");
    const int scale = std::max(1, nx / 8);
    const int ll = preset_default(opt.solid_layers, 4 * scale);
    const int ul = preset_default(opt.upper_layers, 4 * scale);
    const int ml = preset_default(opt.medium_layers, 2 * scale);
    mesh = build_layered_3d(nx, nx, 8.0, 8.0,
                            {{"lower", RegionRole::solid, ll, 0.0, 2.0},
                             {"medium", RegionRole::third_medium, ml, 2.0, 2.5},
                             {"upper", RegionRole::solid, ul, 2.5, 3.5}});
    const int layers = ll + ml + ul;
    mesh.node_sets.push_back({"bottom", grid_plane_3d(nx, nx, 0)});
    mesh.node_sets.push_back({"top", grid_plane_3d(nx, nx, layers)});
    std::vector<int> sides;
    const int npx = nx + 1, plane = npx * npx;
    for (int k = 0; k <= layers; ++k)
      for (int j = 0; j <= nx; ++j)
        for (int i = 0; i <= nx; ++i)
          if (i == 0 || i == nx || j == 0 || j == nx) sides.push_back(k * plane + j * npx + i);
    mesh.node_sets.push_back({"sides", sides});
    std::vector<int> patch;
    for (int j = nx / 4; j <= 3 * nx / 4; ++j)
      for (int i = nx / 4; i <= 3 * nx / 4; ++i) patch.push_back(layers * plane + j * npx + i);
    mesh.node_sets.push_back({"loaded_patch", patch});
    mesh.node_sets.push_back({"gap_lower", grid_plane_3d(nx, nx, ll)});
    mesh.node_sets.push_back({"gap_upper", grid_plane_3d(nx, nx, ll + ml)});
  } else {
    throw std::runtime_error("unknown preset '" + preset + "'");
  }
  validate_mesh(mesh);
  return mesh;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw std::runtime_error("mesh line " + std::to_string(line) + ": " + msg);
}

} // namespace

Mesh load_mesh(std::istream& in) {
  Mesh mesh;
  mesh.dim = 0;
  std::string line;
  int lineno = 0;
  struct PendingElement {
    MeshElement e;
    std::string region;
    int line;
  };
  std::vector<std::pair<int, Vec3>> nodes; // (id, X)
  std::vector<PendingElement> pending;

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "dim") {
      if (!(ls >> mesh.dim) || (mesh.dim != 2 && mesh.dim != 3))
        parse_fail(lineno, "expected 'dim 2' or 'dim 3'");
    } else if (tag == "region") {
      std::string name, role;
      if (!(ls >> name >> role)) parse_fail(lineno, "malformed region line");
      if (mesh.find_region(name) >= 0) parse_fail(lineno, "duplicate region '" + name + "'");
      if (role == "solid")
        mesh.regions.push_back({name, RegionRole::solid});
      else if (role == "third_medium")
        mesh.regions.push_back({name, RegionRole::third_medium});
      else
        parse_fail(lineno, "region role must be 'solid' or 'third_medium'");
    } else if (tag == "node") {
      if (mesh.dim == 0) parse_fail(lineno, "'dim' must come before nodes");
      int id;
      Vec3 x = Vec3::Zero();
      if (!(ls >> id >> x[0] >> x[1])) parse_fail(lineno, "malformed node line");
      if (mesh.dim == 3 && !(ls >> x[2])) parse_fail(lineno, "3D node needs z coordinate");
      if (!x.allFinite()) parse_fail(lineno, "non-finite node coordinates");
      nodes.emplace_back(id, x);
    } else if (tag == "element") {
      if (mesh.dim == 0) parse_fail(lineno, "'dim' must come before elements");
      PendingElement pe;
      pe.line = lineno;
      std::string kind;
      if (!(ls >> pe.e.id >> kind >> pe.region)) parse_fail(lineno, "malformed element line");
      if (kind == "T1")
        pe.e.kind = ElementKind::T1;
      else if (kind == "Q1")
        pe.e.kind = ElementKind::Q1;
      else if (kind == "H1")
        pe.e.kind = ElementKind::H1;
      else
        parse_fail(lineno, "unknown element kind '" + kind + "'");
      for (int i = 0; i < element_node_count(pe.e.kind); ++i)
        if (!(ls >> pe.e.nodes[i]))
          parse_fail(lineno, "element connectivity shorter than its kind requires");
      int extra;
      if (ls >> extra) parse_fail(lineno, "element connectivity longer than its kind requires");
      pending.push_back(pe);
    } else if (tag == "nodeset") {
      std::string name;
      if (!(ls >> name)) parse_fail(lineno, "malformed nodeset line");
      std::vector<int> ids;
      int id;
      while (ls >> id) ids.push_back(id);
      mesh.node_sets.push_back({name, ids});
    } else {
      parse_fail(lineno, "unknown directive '" + tag + "'");
    }
  }
  if (mesh.dim == 0) throw std::runtime_error("mesh: missing 'dim' header");

  // Node ids must be dense 0..N-1.
  mesh.X.assign(nodes.size(), Vec3::Zero());
  std::vector<char> seen(nodes.size(), 0);
  for (const auto& [id, x] : nodes) {
    if (id < 0 || id >= static_cast<int>(nodes.size()) || seen[id])
      throw std::runtime_error("mesh: node ids must be dense 0..N-1 (offending id " +
                               std::to_string(id) + ")");
    seen[id] = 1;
    mesh.X[id] = x;
  }

  for (const auto& pe : pending) {
    MeshElement e = pe.e;
    const int reg = mesh.find_region(pe.region);
    if (reg < 0) parse_fail(pe.line, "undefined region '" + pe.region + "'");
    e.region = reg;
    for (int i = 0; i < e.n_nodes(); ++i)
      if (e.nodes[i] < 0 || e.nodes[i] >= mesh.n_nodes())
        parse_fail(pe.line, "undefined node " + std::to_string(e.nodes[i]));
    mesh.elements.push_back(e);
  }
  std::sort(mesh.elements.begin(), mesh.elements.end(),
            [](const MeshElement& a, const MeshElement& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < mesh.elements.size(); ++i)
    if (mesh.elements[i].id != static_cast<int>(i))
      throw std::runtime_error("mesh: element ids must be dense 0..E-1");

  validate_mesh(mesh);
  return mesh;
}

void save_mesh(const Mesh& mesh, std::ostream& out) {
  out << "dim " << mesh.dim << "\n";
  for (const auto& r : mesh.regions)
    out << "region " << r.name << ' '
        << (r.role == RegionRole::solid ? "solid" : "third_medium") << "\n";
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    out << "node " << n << ' ' << fmt_double(mesh.X[n][0]) << ' ' << fmt_double(mesh.X[n][1]);
    if (mesh.dim == 3) out << ' ' << fmt_double(mesh.X[n][2]);
    out << "\n";
  }
  for (const auto& e : mesh.elements) {
    out << "element " << e.id << ' ' << element_kind_name(e.kind) << ' '
        << mesh.regions[e.region].name;
    for (int i = 0; i < e.n_nodes(); ++i) out << ' ' << e.nodes[i];
    out << "\n";
  }
  for (const auto& [name, ids] : mesh.node_sets) {
    out << "nodeset " << name;
    for (int id : ids) out << ' ' << id;
    out << "\n";
  }
}

} // namespace tmc
