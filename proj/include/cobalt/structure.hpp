#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace cobalt {

struct Material {
  double e0 = 2.1e11;   // nominal Young's modulus, Pa
  double rho = 7850.0;  // density, kg/m^3
  double g = 9.81;      // gravitational acceleration, m/s^2
  double nu = 0.3;      // Poisson ratio (torsional shear modulus in 3-D)
};

struct Support {
  int node = 0;
  std::vector<bool> fixed;  // one flag per nodal DOF
};

struct NodalLoad {
  int node = 0;
  Eigen::VectorXd force;  // one entry per nodal DOF, N / N·m
};

/// Geometry, grouping, supports, nominal loads and material constants of a
/// frame structure. Groups are the categorical design variables: every
/// element in a group shares the group's assigned cross-section. Immutable
/// after load.
struct StructureModel {
  struct Element {
    int node_i = 0;
    int node_j = 0;
    int group = 0;
  };

  int dimensionality = 2;  // 2 or 3
  Eigen::MatrixXd nodes;   // n_nodes x dimensionality, m
  std::vector<Element> elements;
  std::vector<std::string> groups;
  std::vector<Support> supports;
  std::vector<NodalLoad> loads;
  Material material;
  bool self_weight = false;  // lump member gravity loads onto nodes

  int node_count() const { return static_cast<int>(nodes.rows()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  int group_count() const { return static_cast<int>(groups.size()); }
  int dof_per_node() const { return dimensionality == 2 ? 3 : 6; }

  double element_length(int el) const;
  /// Maximum pairwise node distance; scales geometric imperfections.
  double characteristic_span() const;
};

/// Aleatoric uncertainty parameters of the Monte Carlo oracle.
struct UncertaintySpec {
  double cov_e = 0.05;         // CoV of Young's modulus
  double cov_load = 0.10;      // CoV of each nodal load
  double geo_sigma_frac = 0.0; // nodal offset sd as fraction of the span
};

/// Parses the JSON structure format (keys: dimensionality, nodes, elements,
/// groups, supports, loads, material, self_weight; SI units) and validates
/// the result. Throws ParseError / ValidationError naming the offending
/// entity.
StructureModel load_structure(const std::filesystem::path& path);

void save_structure(const StructureModel& s, const std::filesystem::path& path);

/// Lists invariant violations; empty means the model is valid. Never throws.
std::vector<std::string> validate(const StructureModel& s);

}  // namespace cobalt
