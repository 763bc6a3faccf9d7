#include "tmc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tmc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const ConfigDoc& doc, int line, const std::string& msg) {
  throw ConfigError(doc.origin + ":" + std::to_string(line) + ": " + msg);
}

[[noreturn]] void fail(const ConfigDoc& doc, const ConfigEntry& e, const std::string& msg) {
  fail(doc, e.line, msg + " (key '" + e.section + "." + e.key + "')");
}

double to_double(const ConfigDoc& doc, const ConfigEntry& e, const std::string& tok) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(doc, e, "expected a number, got '" + tok + "'");
  }
}

int to_int(const ConfigDoc& doc, const ConfigEntry& e, const std::string& tok) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(doc, e, "expected an integer, got '" + tok + "'");
  }
}

bool to_bool(const ConfigDoc& doc, const ConfigEntry& e, const std::string& tok) {
  if (tok == "true" || tok == "on" || tok == "1") return true;
  if (tok == "false" || tok == "off" || tok == "0") return false;
  fail(doc, e, "expected a boolean, got '" + tok + "'");
}

std::vector<std::string> tokens(const std::string& value) {
  std::istringstream ss(value);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

bool is_repeatable(const std::string& section, const std::string& key) {
  if (section == "loads")
    return key == "dirichlet" || key == "traction" || key == "flux" || key == "body_force" ||
           key == "heat_source";
  return section == "output" && key == "profile";
}

// Leading tokens identifying one item of a repeatable key.
int match_tokens(const std::string& key) { return key == "dirichlet" ? 2 : 1; }

} // namespace

ConfigDoc parse_config_doc(const std::string& text, const std::string& origin) {
  ConfigDoc doc;
  doc.origin = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    ConfigEntry e;
    e.section = section;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (e.section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
    doc.entries.push_back(e);
  }
  return doc;
}

void apply_override(ConfigDoc& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + spec + "' must look like section.key=value");
  const std::string path = trim(spec.substr(0, eq));
  const std::string value = trim(spec.substr(eq + 1));
  const auto dot = path.rfind('.');
  if (dot == std::string::npos)
    throw ConfigError("override '" + spec + "' must name section.key");
  ConfigEntry e;
  e.section = path.substr(0, dot);
  e.key = path.substr(dot + 1);
  e.value = value;
  e.line = 0;

  if (is_repeatable(e.section, e.key)) {
    const int nmatch = match_tokens(e.key);
    const auto want = tokens(value);
    for (auto& existing : doc.entries) {
      if (existing.section != e.section || existing.key != e.key) continue;
      const auto have = tokens(existing.value);
      if (static_cast<int>(have.size()) < nmatch || static_cast<int>(want.size()) < nmatch)
        continue;
      if (std::equal(have.begin(), have.begin() + nmatch, want.begin())) {
        existing.value = value;
        return;
      }
    }
    doc.entries.push_back(e);
    return;
  }
  for (auto& existing : doc.entries)
    if (existing.section == e.section && existing.key == e.key) {
      existing.value = value;
      return;
    }
  doc.entries.push_back(e);
}

namespace {

int parse_component(const ConfigDoc& doc, const ConfigEntry& e, const std::string& tok) {
  if (tok == "ux") return dof_comp::ux;
  if (tok == "uy") return dof_comp::uy;
  if (tok == "uz") return dof_comp::uz;
  if (tok == "T" || tok == "temperature") return dof_comp::T;
  if (tok == "p" || tok == "p1" || tok == "p2" || tok == "p3")
    fail(doc, e, "dirichlet constraints on auxiliary fields are not permitted");
  fail(doc, e, "unknown dof component '" + tok + "'");
}

int parse_axis(const ConfigDoc& doc, const ConfigEntry& e, const std::string& tok) {
  if (tok == "x") return 0;
  if (tok == "y") return 1;
  if (tok == "z") return 2;
  fail(doc, e, "axis must be x, y or z");
}

} // namespace

RunConfig interpret_config(const ConfigDoc& doc) {
  RunConfig cfg;
  bool gap_seen = false;
  GapProbe gap;

  auto material_of = [&](const std::string& region) -> MaterialSpec& {
    for (auto& [name, spec] : cfg.materials)
      if (name == region) return spec;
    cfg.materials.push_back({region, MaterialSpec{}});
    return cfg.materials.back().second;
  };

  for (const auto& e : doc.entries) {
    const auto toks = tokens(e.value);
    if (e.section == "problem") {
      if (e.key == "preset") cfg.preset = e.value;
      else if (e.key == "mesh") cfg.mesh_path = e.value;
      else if (e.key == "nx") cfg.preset_options.nx = to_int(doc, e, e.value);
      else if (e.key == "solid_layers") cfg.preset_options.solid_layers = to_int(doc, e, e.value);
      else if (e.key == "upper_layers") cfg.preset_options.upper_layers = to_int(doc, e, e.value);
      else if (e.key == "medium_layers") cfg.preset_options.medium_layers = to_int(doc, e, e.value);
      else if (e.key == "element") {
        if (e.value == "Q1") cfg.preset_options.kind2d = ElementKind::Q1;
        else if (e.value == "T1") cfg.preset_options.kind2d = ElementKind::T1;
        else fail(doc, e, "element must be Q1 or T1");
        cfg.preset_options.kind_set = true;
      } else if (e.key == "amplitude") cfg.preset_options.amplitude = to_double(doc, e, e.value);
      else if (e.key == "halfwaves") cfg.preset_options.halfwaves = to_int(doc, e, e.value);
      else if (e.key == "gap0") cfg.preset_options.gap0 = to_double(doc, e, e.value);
      else fail(doc, e, "unknown key");
    } else if (e.section.rfind("material.", 0) == 0) {
      const std::string region = e.section.substr(9);
      if (region.empty()) fail(doc, e, "material section needs a region name");
      MaterialSpec& m = material_of(region);
      if (e.key == "role") {
        if (e.value == "solid") m.role = RegionRole::solid;
        else if (e.value == "third_medium") m.role = RegionRole::third_medium;
        else fail(doc, e, "role must be solid or third_medium");
      } else if (e.key == "K") m.solid.K = to_double(doc, e, e.value);
      else if (e.key == "mu") m.solid.mu = to_double(doc, e, e.value);
      else if (e.key == "alpha_t") m.solid.alpha_t = to_double(doc, e, e.value);
      else if (e.key == "k_theta") m.solid.k_theta = to_double(doc, e, e.value);
      else if (e.key == "theta0") { m.solid.theta0 = to_double(doc, e, e.value); m.medium.theta0 = m.solid.theta0; }
      else if (e.key == "gamma") m.medium.gamma = to_double(doc, e, e.value);
      else if (e.key == "alpha_tm") m.medium.alpha_tm = to_double(doc, e, e.value);
      else if (e.key == "k_tm") m.medium.k_tm = to_double(doc, e, e.value);
      else if (e.key == "beta1") m.medium.beta1 = to_double(doc, e, e.value);
      else if (e.key == "beta2") m.medium.beta2 = to_double(doc, e, e.value);
      else if (e.key == "k_cap") {
        if (e.value == "auto") m.k_cap_auto = true;
        else { m.medium.k_cap = to_double(doc, e, e.value); m.k_cap_auto = false; }
      } else fail(doc, e, "unknown key");
    } else if (e.section == "loads") {
      if (e.key == "dirichlet") {
        if (toks.size() != 3) fail(doc, e, "dirichlet needs: <nodeset> <component> <value>");
        DirichletItem item;
        item.node_set = toks[0];
        item.comp = parse_component(doc, e, toks[1]);
        item.value = to_double(doc, e, toks[2]);
        cfg.program.dirichlet.push_back(item);
      } else if (e.key == "traction") {
        if (toks.size() != 3 && toks.size() != 4)
          fail(doc, e, "traction needs: <nodeset> <tx> <ty> [<tz>]");
        TractionItem item;
        item.node_set = toks[0];
        for (std::size_t i = 1; i < toks.size(); ++i)
          item.traction[i - 1] = to_double(doc, e, toks[i]);
        cfg.program.tractions.push_back(item);
      } else if (e.key == "flux") {
        if (toks.size() != 2) fail(doc, e, "flux needs: <nodeset> <q>");
        cfg.program.fluxes.push_back({toks[0], to_double(doc, e, toks[1])});
      } else if (e.key == "body_force") {
        if (toks.size() != 3 && toks.size() != 4)
          fail(doc, e, "body_force needs: <region> <bx> <by> [<bz>]");
        RegionLoad rl;
        rl.region = toks[0];
        for (std::size_t i = 1; i < toks.size(); ++i)
          rl.body_force[i - 1] = to_double(doc, e, toks[i]);
        cfg.program.region_loads.push_back(rl);
      } else if (e.key == "heat_source") {
        if (toks.size() != 2) fail(doc, e, "heat_source needs: <region> <r>");
        RegionLoad rl;
        rl.region = toks[0];
        rl.heat_source = to_double(doc, e, toks[1]);
        cfg.program.region_loads.push_back(rl);
      } else fail(doc, e, "unknown key");
    } else if (e.section == "stepping") {
      auto& s = cfg.program.stepping;
      if (e.key == "dlambda0") s.dlambda0 = to_double(doc, e, e.value);
      else if (e.key == "dlambda_min") s.dlambda_min = to_double(doc, e, e.value);
      else if (e.key == "dlambda_max") s.dlambda_max = to_double(doc, e, e.value);
      else if (e.key == "growth") s.growth = to_double(doc, e, e.value);
      else if (e.key == "fast_iters") s.fast_iters = to_int(doc, e, e.value);
      else if (e.key == "max_iters") s.max_iters = to_int(doc, e, e.value);
      else if (e.key == "tol_abs") s.tol_abs = to_double(doc, e, e.value);
      else if (e.key == "tol_rel") s.tol_rel = to_double(doc, e, e.value);
      else fail(doc, e, "unknown key");
    } else if (e.section == "solver") {
      if (e.key == "conductivity_law") {
        if (e.value == "paper") cfg.solver.law = ConductivityLaw::paper;
        else if (e.value == "floored") cfg.solver.law = ConductivityLaw::floored;
        else fail(doc, e, "conductivity_law must be paper or floored");
      } else if (e.key == "tangent") {
        if (e.value == "analytic") cfg.solver.fd_tangent = false;
        else if (e.value == "fd") cfg.solver.fd_tangent = true;
        else fail(doc, e, "tangent must be analytic or fd");
      } else if (e.key == "threads") {
        cfg.solver.threads = to_int(doc, e, e.value);
        if (cfg.solver.threads < 1) fail(doc, e, "threads must be >= 1");
      } else fail(doc, e, "unknown key");
    } else if (e.section == "gap") {
      gap_seen = true;
      if (e.key == "lower") gap.lower = e.value;
      else if (e.key == "upper") gap.upper = e.value;
      else if (e.key == "axis") gap.axis = parse_axis(doc, e, e.value);
      else fail(doc, e, "unknown key");
    } else if (e.section == "output") {
      if (e.key == "directory") cfg.out_dir = e.value;
      else if (e.key == "vtk") {
        if (e.value == "off") cfg.vtk = VtkMode::off;
        else if (e.value == "final") cfg.vtk = VtkMode::final_only;
        else if (e.value == "steps") cfg.vtk = VtkMode::steps;
        else fail(doc, e, "vtk must be off, final or steps");
      } else if (e.key == "omit_medium") cfg.omit_medium = to_bool(doc, e, e.value);
      else if (e.key == "history") cfg.write_history = to_bool(doc, e, e.value);
      else if (e.key == "summary") cfg.write_summary = to_bool(doc, e, e.value);
      else if (e.key == "snapshot") cfg.write_snapshot = to_bool(doc, e, e.value);
      else if (e.key == "profile") {
        // <name> <x0> <y0> [<z0>] <x1> <y1> [<z1>] <n> <field>
        if (toks.size() != 7 && toks.size() != 9)
          fail(doc, e, "profile needs: <name> <start coords> <end coords> <n> <field>");
        ProfileRequest p;
        p.name = toks[0];
        const int d = toks.size() == 7 ? 2 : 3;
        for (int a = 0; a < d; ++a) {
          p.start[a] = to_double(doc, e, toks[1 + a]);
          p.end[a] = to_double(doc, e, toks[1 + d + a]);
        }
        p.samples = to_int(doc, e, toks[1 + 2 * d]);
        if (p.samples < 2) fail(doc, e, "profile needs at least 2 samples");
        try {
          p.field = parse_profile_field(toks[2 + 2 * d]);
        } catch (const std::exception& ex) {
          fail(doc, e, ex.what());
        }
        cfg.profiles.push_back(p);
      } else fail(doc, e, "unknown key");
    } else {
      fail(doc, e, "unknown section '" + e.section + "'");
    }
  }

  if (cfg.preset.empty() && cfg.mesh_path.empty())
    throw ConfigError(doc.origin + ": config must name a preset or a mesh file");
  if (!cfg.preset.empty() && !cfg.mesh_path.empty())
    throw ConfigError(doc.origin + ": preset and mesh file are mutually exclusive");
  if (gap_seen) {
    if (gap.lower.empty() || gap.upper.empty())
      throw ConfigError(doc.origin + ": [gap] needs both lower and upper node sets");
    cfg.gap = gap;
  }
  const auto& s = cfg.program.stepping;
  if (!(s.dlambda_min <= s.dlambda0 && s.dlambda0 <= s.dlambda_max))
    throw ConfigError(doc.origin + ": stepping requires dlambda_min <= dlambda0 <= dlambda_max");
  return cfg;
}

Mesh build_problem_mesh(const RunConfig& config) {
  if (!config.preset.empty()) return generate_preset_mesh(config.preset, config.preset_options);
  std::ifstream in(config.mesh_path);
  if (!in) throw ConfigError("cannot open mesh file '" + config.mesh_path + "'");
  return load_mesh(in);
}

MaterialTable resolve_materials(const Mesh& mesh, const RunConfig& config) {
  MaterialTable table;
  const double d = domain_extent(mesh);
  double k_cap_auto = 0.0;
  bool have_solid = false;
  for (const auto& [name, spec] : config.materials) {
    if (mesh.find_region(name) < 0)
      throw ConfigError("material section names unknown region '" + name + "'");
    if (spec.role == RegionRole::solid) {
      k_cap_auto = have_solid ? std::min(k_cap_auto, spec.solid.k_theta) : spec.solid.k_theta;
      have_solid = true;
    }
  }
  for (const auto& region : mesh.regions) {
    const MaterialSpec* spec = nullptr;
    for (const auto& [name, s] : config.materials)
      if (name == region.name) spec = &s;
    if (!spec) throw ConfigError("no material given for region '" + region.name + "'");
    if (spec->role != region.role)
      throw ConfigError("material role for region '" + region.name + "' does not match the mesh");
    ElementMaterial mat;
    mat.role = region.role;
    mat.solid = spec->solid;
    mat.medium = spec->medium;
    mat.medium.d = d;
    if (region.role == RegionRole::third_medium && spec->k_cap_auto)
      mat.medium.k_cap = have_solid ? k_cap_auto : spec->medium.k_tm;
    if (region.role == RegionRole::solid) {
      if (!(mat.solid.K > 0.0) || !(mat.solid.mu > 0.0) || !(mat.solid.k_theta > 0.0))
        throw ConfigError("region '" + region.name + "' needs positive K, mu and k_theta");
    } else {
      if (!(mat.medium.gamma > 0.0) || !(mat.medium.k_tm > 0.0))
        throw ConfigError("region '" + region.name + "' needs positive gamma and k_tm");
      if (!(mat.medium.beta1 > 0.0) || !(mat.medium.beta2 > 0.0))
        throw ConfigError("region '" + region.name + "' needs positive beta1 and beta2");
    }
    table.by_region.push_back(mat);
  }
  return table;
}

} // namespace tmc
