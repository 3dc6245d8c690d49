#include "cobalt/fea.hpp"

#include <cmath>
#include <string>

#include "cobalt/errors.hpp"

namespace cobalt {

namespace {

struct Section {
  double a = 0.0;
  double iy = 0.0;
  double iz = 0.0;
  double jx = 0.0;
};

Section section_of(const Catalog& catalog, int idx, int dimensionality) {
  Section s;
  s.a = catalog.attributes(idx, 0);
  s.iy = catalog.attributes(idx, 1);
  s.iz = catalog.attributes(idx, 2);
  if (catalog.dim() >= 4) {
    s.jx = catalog.attributes(idx, 3);
  } else if (dimensionality == 3) {
    throw ValidationError("3-D structures need a catalog with a torsion column Jx");
  }
  return s;
}

/// Local 6x6 plane-frame stiffness, DOFs [u1 v1 r1 u2 v2 r2]. In-plane
/// bending uses the section's Iz.
Eigen::Matrix<double, 6, 6> local_stiffness_2d(double e, const Section& sec, double len) {
  const double a = e * sec.a / len;
  const double b = 12.0 * e * sec.iz / (len * len * len);
  const double c = 6.0 * e * sec.iz / (len * len);
  const double d = 4.0 * e * sec.iz / len;
  const double d2 = 2.0 * e * sec.iz / len;
  Eigen::Matrix<double, 6, 6> k;
  k << a, 0, 0, -a, 0, 0,        //
      0, b, c, 0, -b, c,         //
      0, c, d, 0, -c, d2,        //
      -a, 0, 0, a, 0, 0,         //
      0, -b, -c, 0, b, -c,       //
      0, c, d2, 0, -c, d;
  return k;
}

/// Local 12x12 space-frame stiffness, DOFs [u v w rx ry rz] per node.
/// Bending about local z (displacement v) uses Iz; about local y
/// (displacement w) uses Iy; St. Venant torsion uses Jx.
Eigen::Matrix<double, 12, 12> local_stiffness_3d(double e, double g_mod, const Section& sec,
                                                 double len) {
  Eigen::Matrix<double, 12, 12> k = Eigen::Matrix<double, 12, 12>::Zero();
  const double l2 = len * len, l3 = l2 * len;
  const double ax = e * sec.a / len;
  const double tor = g_mod * sec.jx / len;
  const double bz = 12.0 * e * sec.iz / l3, cz = 6.0 * e * sec.iz / l2;
  const double dz = 4.0 * e * sec.iz / len, ez = 2.0 * e * sec.iz / len;
  const double by = 12.0 * e * sec.iy / l3, cy = 6.0 * e * sec.iy / l2;
  const double dy = 4.0 * e * sec.iy / len, ey = 2.0 * e * sec.iy / len;

  k(0, 0) = ax; k(0, 6) = -ax; k(6, 6) = ax;
  k(3, 3) = tor; k(3, 9) = -tor; k(9, 9) = tor;
  // v / rz plane
  k(1, 1) = bz; k(1, 5) = cz; k(1, 7) = -bz; k(1, 11) = cz;
  k(5, 5) = dz; k(5, 7) = -cz; k(5, 11) = ez;
  k(7, 7) = bz; k(7, 11) = -cz;
  k(11, 11) = dz;
  // w / ry plane (sign convention flips the coupling terms)
  k(2, 2) = by; k(2, 4) = -cy; k(2, 8) = -by; k(2, 10) = -cy;
  k(4, 4) = dy; k(4, 8) = cy; k(4, 10) = ey;
  k(8, 8) = by; k(8, 10) = cy;
  k(10, 10) = dy;

  return k.selfadjointView<Eigen::Upper>();
}

/// Direction cosine matrix for a 3-D member: rows are the local x,y,z axes
/// in global coordinates. Near-vertical members fall back to the global Y
/// axis as orientation reference.
Eigen::Matrix3d local_axes_3d(const Eigen::Vector3d& axis) {
  Eigen::Vector3d x = axis.normalized();
  Eigen::Vector3d ref = Eigen::Vector3d::UnitZ();
  if (std::abs(x.dot(ref)) > 0.999) ref = Eigen::Vector3d::UnitY();
  Eigen::Vector3d y = ref.cross(x).normalized();
  Eigen::Vector3d z = x.cross(y);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return r;
}

struct ElementOperator {
  Eigen::MatrixXd k_global;    // dof x dof element stiffness in global frame
  Eigen::MatrixXd transform;   // global -> local displacement map
  double length = 0.0;
  double ea_over_l = 0.0;
  std::vector<int> dof_map;    // global DOF indices
};

ElementOperator build_element(const StructureModel& s, const Section& sec, double e_modulus,
                              const Eigen::MatrixXd& coords, int el) {
  const auto& elem = s.elements[static_cast<std::size_t>(el)];
  const int dpn = s.dof_per_node();
  ElementOperator op;

  Eigen::VectorXd delta = coords.row(elem.node_j) - coords.row(elem.node_i);
  op.length = delta.norm();
  if (!(op.length > 1e-12))
    throw ValidationError("element " + std::to_string(el) + " has zero length after perturbation");

  if (s.dimensionality == 2) {
    const double cx = delta(0) / op.length, cy = delta(1) / op.length;
    Eigen::Matrix<double, 6, 6> t = Eigen::Matrix<double, 6, 6>::Zero();
    t(0, 0) = cx; t(0, 1) = cy;
    t(1, 0) = -cy; t(1, 1) = cx;
    t(2, 2) = 1.0;
    t.block<3, 3>(3, 3) = t.block<3, 3>(0, 0);
    Eigen::Matrix<double, 6, 6> kl = local_stiffness_2d(e_modulus, sec, op.length);
    op.k_global = t.transpose() * kl * t;
    op.transform = t;
  } else {
    const double g_mod = e_modulus / (2.0 * (1.0 + s.material.nu));
    Eigen::Matrix3d r = local_axes_3d(delta);
    Eigen::Matrix<double, 12, 12> t = Eigen::Matrix<double, 12, 12>::Zero();
    for (int b = 0; b < 4; ++b) t.block<3, 3>(3 * b, 3 * b) = r;
    Eigen::Matrix<double, 12, 12> kl = local_stiffness_3d(e_modulus, g_mod, sec, op.length);
    op.k_global = t.transpose() * kl * t;
    op.transform = t;
  }

  op.ea_over_l = e_modulus * sec.a / op.length;
  op.dof_map.resize(static_cast<std::size_t>(2 * dpn));
  for (int d = 0; d < dpn; ++d) {
    op.dof_map[static_cast<std::size_t>(d)] = elem.node_i * dpn + d;
    op.dof_map[static_cast<std::size_t>(dpn + d)] = elem.node_j * dpn + d;
  }
  return op;
}

}  // namespace

void validate_assignment(const StructureModel& s, const Catalog& catalog,
                         const Design& assignment) {
  if (static_cast<int>(assignment.size()) != s.group_count())
    throw ValidationError("assignment length " + std::to_string(assignment.size()) +
                          " does not match group count " + std::to_string(s.group_count()));
  for (std::size_t g = 0; g < assignment.size(); ++g) {
    if (assignment[g] < 0 || assignment[g] >= catalog.size())
      throw ValidationError("group '" + s.groups[g] + "' assigned catalog index " +
                            std::to_string(assignment[g]) + " outside [0," +
                            std::to_string(catalog.size()) + ")");
  }
}

Eigen::MatrixXd assemble_global_stiffness(const StructureModel& s, const Catalog& catalog,
                                          const Design& assignment, double e_modulus,
                                          const Eigen::MatrixXd& node_offsets) {
  validate_assignment(s, catalog, assignment);
  if (!std::isfinite(e_modulus) || e_modulus <= 0.0)
    throw ValidationError("Young's modulus must be finite and positive");
  if (node_offsets.rows() != s.nodes.rows() || node_offsets.cols() != s.nodes.cols())
    throw ValidationError("node offsets must match the node array shape");
  if (!node_offsets.allFinite()) throw ValidationError("node offsets contain non-finite values");

  Eigen::MatrixXd coords = s.nodes + node_offsets;
  const int ndof = s.node_count() * s.dof_per_node();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ndof, ndof);
  for (int el = 0; el < s.element_count(); ++el) {
    const auto& elem = s.elements[static_cast<std::size_t>(el)];
    Section sec = section_of(catalog, assignment[static_cast<std::size_t>(elem.group)],
                             s.dimensionality);
    ElementOperator op = build_element(s, sec, e_modulus, coords, el);
    const int nd = static_cast<int>(op.dof_map.size());
    for (int a = 0; a < nd; ++a)
      for (int b = 0; b < nd; ++b)
        k(op.dof_map[static_cast<std::size_t>(a)], op.dof_map[static_cast<std::size_t>(b)]) +=
            op.k_global(a, b);
  }
  return k;
}

FeaResult assemble_and_solve(const StructureModel& s, const Catalog& catalog,
                             const Design& assignment, double e_modulus,
                             const Eigen::MatrixXd& node_offsets,
                             const std::vector<NodalLoad>& loads, const FeaOptions& options) {
  validate_assignment(s, catalog, assignment);
  if (!std::isfinite(e_modulus) || e_modulus <= 0.0)
    throw ValidationError("Young's modulus must be finite and positive");
  if (node_offsets.rows() != s.nodes.rows() || node_offsets.cols() != s.nodes.cols())
    throw ValidationError("node offsets must match the node array shape");
  if (!node_offsets.allFinite()) throw ValidationError("node offsets contain non-finite values");

  const int dpn = s.dof_per_node();
  const int ndof = s.node_count() * dpn;
  Eigen::MatrixXd coords = s.nodes + node_offsets;

  std::vector<ElementOperator> ops;
  ops.reserve(static_cast<std::size_t>(s.element_count()));
  std::vector<Section> sections;
  sections.reserve(static_cast<std::size_t>(s.element_count()));

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ndof, ndof);
  double mass = 0.0;
  Eigen::VectorXd gravity = Eigen::VectorXd::Zero(ndof);
  for (int el = 0; el < s.element_count(); ++el) {
    const auto& elem = s.elements[static_cast<std::size_t>(el)];
    Section sec = section_of(catalog, assignment[static_cast<std::size_t>(elem.group)],
                             s.dimensionality);
    sections.push_back(sec);
    ElementOperator op = build_element(s, sec, e_modulus, coords, el);
    const int nd = static_cast<int>(op.dof_map.size());
    for (int a = 0; a < nd; ++a)
      for (int b = 0; b < nd; ++b)
        k(op.dof_map[static_cast<std::size_t>(a)], op.dof_map[static_cast<std::size_t>(b)]) +=
            op.k_global(a, b);

    // Mass over the nominal geometry so the mass constraint stays
    // deterministic under geometric imperfections.
    double nominal_len = s.element_length(el);
    double el_mass = s.material.rho * sec.a * nominal_len;
    mass += el_mass;
    if (s.self_weight) {
      int vertical = s.dimensionality - 1;  // y in 2-D, z in 3-D
      double w = 0.5 * el_mass * s.material.g;
      gravity(elem.node_i * dpn + vertical) -= w;
      gravity(elem.node_j * dpn + vertical) -= w;
    }
    ops.push_back(std::move(op));
  }

  Eigen::VectorXd p = gravity;
  for (const auto& load : loads) {
    if (load.node < 0 || load.node >= s.node_count())
      throw ValidationError("load references missing node " + std::to_string(load.node));
    if (load.force.size() != dpn)
      throw ValidationError("load at node " + std::to_string(load.node) + " must have " +
                            std::to_string(dpn) + " components");
    if (!load.force.allFinite()) throw ValidationError("non-finite load components");
    p.segment(load.node * dpn, dpn) += load.force;
  }

  std::vector<bool> is_fixed(static_cast<std::size_t>(ndof), false);
  for (const auto& sup : s.supports) {
    for (int d = 0; d < dpn; ++d) {
      if (sup.fixed[static_cast<std::size_t>(d)])
        is_fixed[static_cast<std::size_t>(sup.node * dpn + d)] = true;
    }
  }
  std::vector<int> free_dofs;
  for (int i = 0; i < ndof; ++i) {
    if (!is_fixed[static_cast<std::size_t>(i)]) free_dofs.push_back(i);
  }
  const int nfree = static_cast<int>(free_dofs.size());
  if (nfree == 0) throw ValidationError("all DOFs are fixed; nothing to solve");

  Eigen::MatrixXd k_red(nfree, nfree);
  Eigen::VectorXd p_red(nfree);
  for (int a = 0; a < nfree; ++a) {
    p_red(a) = p(free_dofs[static_cast<std::size_t>(a)]);
    for (int b = 0; b < nfree; ++b)
      k_red(a, b) = k(free_dofs[static_cast<std::size_t>(a)], free_dofs[static_cast<std::size_t>(b)]);
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(k_red);
  if (ldlt.info() != Eigen::Success)
    throw SolveError("stiffness factorization failed; structure is a mechanism");
  Eigen::VectorXd diag = ldlt.vectorD();
  double dmax = diag.cwiseAbs().maxCoeff();
  double dmin = diag.cwiseAbs().minCoeff();
  if (!(dmax > 0.0) || dmin <= 1e-12 * dmax) {
    Eigen::Index weak = 0;
    diag.cwiseAbs().minCoeff(&weak);
    throw SolveError("singular stiffness: near-zero pivot " + std::to_string(dmin) +
                     " at reduced DOF " + std::to_string(weak));
  }

  Eigen::VectorXd u_red = ldlt.solve(p_red);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(ndof);
  for (int a = 0; a < nfree; ++a) u(free_dofs[static_cast<std::size_t>(a)]) = u_red(a);

  FeaResult res;
  res.displacements = u;
  res.strain_energy = 0.5 * u.dot(k * u);
  res.mass = mass;

  const int ne = s.element_count();
  res.axial_forces.resize(ne);
  res.buckling_margin_y.resize(ne);
  res.buckling_margin_z.resize(ne);
  const double klf = options.effective_length_factor;
  for (int el = 0; el < ne; ++el) {
    const auto& op = ops[static_cast<std::size_t>(el)];
    const int nd = static_cast<int>(op.dof_map.size());
    Eigen::VectorXd u_el(nd);
    for (int a = 0; a < nd; ++a) u_el(a) = u(op.dof_map[static_cast<std::size_t>(a)]);
    Eigen::VectorXd u_local = op.transform * u_el;
    double axial = op.ea_over_l * (u_local(nd / 2) - u_local(0));
    res.axial_forces(el) = axial;

    double compression = std::max(0.0, -axial);
    double eff_len = klf * op.length;
    double euler_y = M_PI * M_PI * e_modulus * sections[static_cast<std::size_t>(el)].iy /
                     (eff_len * eff_len);
    double euler_z = M_PI * M_PI * e_modulus * sections[static_cast<std::size_t>(el)].iz /
                     (eff_len * eff_len);
    res.buckling_margin_y(el) = compression - euler_y;
    res.buckling_margin_z(el) = compression - euler_z;
  }
  return res;
}

}  // namespace cobalt
