#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cobalt/catalog.hpp"
#include "cobalt/design.hpp"
#include "cobalt/structure.hpp"

namespace cobalt {

struct FeaResult {
  Eigen::VectorXd displacements;      // full DOF vector (fixed DOFs zero)
  double strain_energy = 0.0;         // 1/2 u^T K u, J
  double mass = 0.0;                  // nominal-geometry mass, kg
  Eigen::VectorXd axial_forces;       // per element, tension positive, N
  Eigen::VectorXd buckling_margin_y;  // per element: |compression| - pi^2 E Iy/(kL)^2
  Eigen::VectorXd buckling_margin_z;  // positive margin = violation
};

struct FeaOptions {
  double effective_length_factor = 1.0;  // pinned-pinned Euler columns
};

/// Throws ValidationError if the assignment does not pair with the
/// structure's groups or indexes outside the catalog.
void validate_assignment(const StructureModel& s, const Catalog& catalog, const Design& assignment);

/// Global stiffness matrix of the assigned structure before support
/// elimination (Euler-Bernoulli frame elements, raw catalog attributes).
/// `node_offsets` perturbs nodal coordinates; pass a zero matrix for the
/// nominal geometry.
Eigen::MatrixXd assemble_global_stiffness(const StructureModel& s, const Catalog& catalog,
                                          const Design& assignment, double e_modulus,
                                          const Eigen::MatrixXd& node_offsets);

/// Linear-elastic solve of the assigned structure under the given loads and
/// geometry perturbation. Mass always uses the nominal geometry, so it is
/// identical across realizations of a fixed assignment. Throws SolveError
/// when the stiffness is singular (mechanismesque input).
FeaResult assemble_and_solve(const StructureModel& s, const Catalog& catalog,
                             const Design& assignment, double e_modulus,
                             const Eigen::MatrixXd& node_offsets,
                             const std::vector<NodalLoad>& loads, const FeaOptions& options = {});

}  // namespace cobalt
