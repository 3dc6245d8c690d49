#include "cobalt/structure.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cobalt/errors.hpp"

namespace cobalt {

using nlohmann::json;

double StructureModel::element_length(int el) const {
  const auto& e = elements[static_cast<std::size_t>(el)];
  return (nodes.row(e.node_j) - nodes.row(e.node_i)).norm();
}

double StructureModel::characteristic_span() const {
  double span = 0.0;
  for (int i = 0; i < node_count(); ++i)
    for (int j = i + 1; j < node_count(); ++j)
      span = std::max(span, (nodes.row(j) - nodes.row(i)).norm());
  return span;
}

std::vector<std::string> validate(const StructureModel& s) {
  std::vector<std::string> out;
  const int n = s.node_count();
  const int dpn = s.dof_per_node();

  if (s.dimensionality != 2 && s.dimensionality != 3)
    out.push_back("dimensionality must be 2 or 3");
  if (n == 0) out.push_back("structure has no nodes");
  if (!s.nodes.allFinite()) out.push_back("node coordinates contain non-finite values");
  if (s.elements.empty()) out.push_back("structure has no elements");
  if (s.groups.empty()) out.push_back("structure has no groups");

  std::vector<int> members_per_group(s.groups.size(), 0);
  for (std::size_t i = 0; i < s.elements.size(); ++i) {
    const auto& e = s.elements[i];
    std::string tag = "element " + std::to_string(i);
    if (e.node_i < 0 || e.node_i >= n || e.node_j < 0 || e.node_j >= n) {
      out.push_back(tag + " references a missing node");
      continue;
    }
    if (e.group < 0 || e.group >= s.group_count()) {
      out.push_back(tag + " references a missing group");
      continue;
    }
    ++members_per_group[static_cast<std::size_t>(e.group)];
    if (s.element_length(static_cast<int>(i)) <= 0.0) out.push_back(tag + " has zero length");
  }
  for (std::size_t g = 0; g < s.groups.size(); ++g) {
    if (members_per_group[g] == 0) out.push_back("group '" + s.groups[g] + "' owns no elements");
  }

  if (s.supports.empty()) out.push_back("structure has no supports");
  for (const auto& sup : s.supports) {
    if (sup.node < 0 || sup.node >= n)
      out.push_back("support references missing node " + std::to_string(sup.node));
    if (static_cast<int>(sup.fixed.size()) != dpn)
      out.push_back("support at node " + std::to_string(sup.node) + " must list " +
                    std::to_string(dpn) + " DOF flags");
  }
  for (const auto& load : s.loads) {
    if (load.node < 0 || load.node >= n)
      out.push_back("load references missing node " + std::to_string(load.node));
    if (load.force.size() != dpn)
      out.push_back("load at node " + std::to_string(load.node) + " must list " +
                    std::to_string(dpn) + " force components");
    if (!load.force.allFinite())
      out.push_back("load at node " + std::to_string(load.node) + " has non-finite components");
  }
  return out;
}

StructureModel load_structure(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open structure file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("structure file '" + path.string() + "': " + e.what());
  }

  StructureModel s;
  try {
    s.dimensionality = j.at("dimensionality").get<int>();
    const auto& jn = j.at("nodes");
    s.nodes.resize(static_cast<Eigen::Index>(jn.size()), s.dimensionality);
    for (std::size_t i = 0; i < jn.size(); ++i) {
      if (static_cast<int>(jn[i].size()) != s.dimensionality)
        throw ParseError("node " + std::to_string(i) + " must have " +
                         std::to_string(s.dimensionality) + " coordinates");
      for (int d = 0; d < s.dimensionality; ++d)
        s.nodes(static_cast<Eigen::Index>(i), d) = jn[i][static_cast<std::size_t>(d)].get<double>();
    }
    for (const auto& je : j.at("elements")) {
      if (je.size() != 3) throw ParseError("elements must be [node_i, node_j, group] triples");
      s.elements.push_back({je[0].get<int>(), je[1].get<int>(), je[2].get<int>()});
    }
    s.groups = j.at("groups").get<std::vector<std::string>>();
    for (const auto& js : j.at("supports")) {
      Support sup;
      sup.node = js.at("node").get<int>();
      sup.fixed = js.at("fixed").get<std::vector<bool>>();
      s.supports.push_back(std::move(sup));
    }
    for (const auto& jl : j.at("loads")) {
      NodalLoad load;
      load.node = jl.at("node").get<int>();
      auto f = jl.at("force").get<std::vector<double>>();
      load.force = Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
      s.loads.push_back(std::move(load));
    }
    if (j.contains("material")) {
      const auto& jm = j.at("material");
      s.material.e0 = jm.value("E0", s.material.e0);
      s.material.rho = jm.value("rho", s.material.rho);
      s.material.g = jm.value("g", s.material.g);
      s.material.nu = jm.value("nu", s.material.nu);
    }
    s.self_weight = j.value("self_weight", false);
  } catch (const json::exception& e) {
    throw ParseError("structure file '" + path.string() + "': " + e.what());
  }

  auto problems = validate(s);
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "structure file '" << path.string() << "' is invalid:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ValidationError(msg.str());
  }
  return s;
}

void save_structure(const StructureModel& s, const std::filesystem::path& path) {
  json j;
  j["dimensionality"] = s.dimensionality;
  auto& jn = j["nodes"] = json::array();
  for (int i = 0; i < s.node_count(); ++i) {
    json row = json::array();
    for (int d = 0; d < s.dimensionality; ++d) row.push_back(s.nodes(i, d));
    jn.push_back(std::move(row));
  }
  auto& je = j["elements"] = json::array();
  for (const auto& e : s.elements) je.push_back({e.node_i, e.node_j, e.group});
  j["groups"] = s.groups;
  auto& js = j["supports"] = json::array();
  for (const auto& sup : s.supports) js.push_back({{"node", sup.node}, {"fixed", sup.fixed}});
  auto& jl = j["loads"] = json::array();
  for (const auto& load : s.loads) {
    std::vector<double> f(load.force.data(), load.force.data() + load.force.size());
    jl.push_back({{"node", load.node}, {"force", f}});
  }
  j["material"] = {{"E0", s.material.e0},
                   {"rho", s.material.rho},
                   {"g", s.material.g},
                   {"nu", s.material.nu}};
  j["self_weight"] = s.self_weight;

  std::ofstream out(path);
  if (!out) throw Error("cannot write structure file '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

}  // namespace cobalt
