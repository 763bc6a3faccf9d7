#pragma once

#include "tmc/postprocess.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tmc {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// One `key = value` line under a `[section]` heading.
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigDoc {
  std::string origin; // path or "<preset>" label for error messages
  std::vector<ConfigEntry> entries;
};

ConfigDoc parse_config_doc(const std::string& text, const std::string& origin);

/// Applies `section.key=value` overrides. Scalar keys are replaced (or
/// appended). Repeatable keys (dirichlet, traction, flux, body_force,
/// heat_source, profile) match on their leading identifying tokens and
/// replace the matching item, appending when none matches.
void apply_override(ConfigDoc& doc, const std::string& spec);

struct MaterialSpec {
  RegionRole role = RegionRole::solid;
  SolidParams solid;
  MediumParams medium;
  bool k_cap_auto = true;
};

struct ProfileRequest {
  std::string name;
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  int samples = 2;
  ProfileField field = ProfileField::temperature;
};

enum class VtkMode { off, final_only, steps };

struct RunConfig {
  // problem
  std::string preset;
  std::string mesh_path;
  PresetOptions preset_options;

  std::vector<std::pair<std::string, MaterialSpec>> materials;
  LoadProgram program;
  AssemblyOptions solver;
  std::optional<GapProbe> gap;

  // output
  std::string out_dir = "out";
  VtkMode vtk = VtkMode::final_only;
  bool omit_medium = true;
  bool write_history = true;
  bool write_summary = true;
  bool write_snapshot = false;
  std::vector<ProfileRequest> profiles;
};

RunConfig interpret_config(const ConfigDoc& doc);

/// Builds the mesh named by the config (preset or file).
Mesh build_problem_mesh(const RunConfig& config);

/// Region-name keyed materials resolved onto mesh regions; fills the domain
/// scale d and the automatic conductivity cap (smallest solid conductivity).
MaterialTable resolve_materials(const Mesh& mesh, const RunConfig& config);

/// Bundled benchmark configs (block2d, two_blocks2d, wavy_interface2d,
/// block_plate3d); throws ConfigError for unknown names.
const std::string& preset_config_text(const std::string& name);
std::vector<std::string> preset_config_names();

} // namespace tmc
