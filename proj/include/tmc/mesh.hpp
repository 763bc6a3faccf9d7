#pragma once

#include "tmc/element.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace tmc {

struct Region {
  std::string name;
  RegionRole role = RegionRole::solid;
};

struct MeshElement {
  int id = 0;
  ElementKind kind = ElementKind::Q1;
  int region = 0;
  std::array<int, 8> nodes{};
  int n_nodes() const { return element_node_count(kind); }
};

/// Immutable after construction; safe for shared reads from element workers.
struct Mesh {
  int dim = 2;
  std::vector<Vec3> X; // reference coordinates, z = 0 in 2D
  std::vector<MeshElement> elements;
  std::vector<Region> regions;
  std::vector<std::pair<std::string, std::vector<int>>> node_sets;

  int n_nodes() const { return static_cast<int>(X.size()); }
  int find_region(const std::string& name) const;
  const std::vector<int>* find_node_set(const std::string& name) const;
  bool has_medium() const;
  /// n x dim reference coordinates of one element.
  Eigen::MatrixXd element_coords(const MeshElement& e) const;
};

/// Checks connectivity bounds, orphan nodes, kind/dim consistency and strict
/// positivity of the reference Jacobian at every quadrature point.
void validate_mesh(const Mesh& mesh);

/// Largest axis-aligned extent of the reference configuration.
double domain_extent(const Mesh& mesh);

/// Resolution and geometry overrides for the benchmark presets; negative
/// values pick the preset default.
struct PresetOptions {
  int nx = -1;            // in-plane resolution
  int solid_layers = -1;  // element rows per solid along the load axis
  int upper_layers = -1;  // upper solid override (3D plate / two-block upper)
  int medium_layers = -1; // third-medium element rows/layers
  ElementKind kind2d = ElementKind::Q1;
  bool kind_set = false;
  double amplitude = -1.0; // wavy preset: asperity amplitude
  int halfwaves = -1;      // wavy preset: half-waves across the width
  double gap0 = -1.0;      // wavy preset: clearance above the asperity peaks
};

/// Presets: block2d, two_blocks2d, wavy_interface2d, block_plate3d.
Mesh generate_preset_mesh(const std::string& preset, const PresetOptions& opt = {});

/// Line-oriented text format, '#' comments:
///   dim <2|3>
///   region <name> <solid|third_medium>
///   node <id> <x> <y> [<z>]
///   element <id> <T1|Q1|H1> <region> <n0> <n1> ...
///   nodeset <name> <id...>
Mesh load_mesh(std::istream& in);
void save_mesh(const Mesh& mesh, std::ostream& out);

} // namespace tmc
