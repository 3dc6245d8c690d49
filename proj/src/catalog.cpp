#include "cobalt/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cobalt/errors.hpp"
#include "cobalt/rng.hpp"

namespace cobalt {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

int Catalog::attribute_index(const std::string& name) const {
  for (int j = 0; j < dim(); ++j) {
    if (attribute_names[static_cast<std::size_t>(j)] == name) return j;
  }
  return -1;
}

std::uint64_t Catalog::content_hash() const {
  std::uint64_t h = fnv1a64("catalog");
  for (const auto& id : ids) h = splitmix64(h ^ fnv1a64(id));
  for (const auto& a : attribute_names) h = splitmix64(h ^ fnv1a64(a));
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < dim(); ++j) {
      std::uint64_t bits;
      double v = attributes(i, j);
      std::memcpy(&bits, &v, sizeof(bits));
      h = splitmix64(h ^ bits);
    }
  }
  return h;
}

Catalog make_catalog(std::vector<std::string> ids,
                     std::vector<std::string> attribute_names,
                     Eigen::MatrixXd attributes) {
  const auto n = attributes.rows();
  const auto m = attributes.cols();
  if (n < 2) throw ValidationError("catalog needs at least 2 instances, got " + std::to_string(n));
  if (static_cast<Eigen::Index>(ids.size()) != n)
    throw ValidationError("catalog id count does not match attribute rows");
  if (static_cast<Eigen::Index>(attribute_names.size()) != m)
    throw ValidationError("catalog attribute name count does not match columns");
  if (!attributes.allFinite()) throw ValidationError("catalog contains non-finite attribute values");

  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw ValidationError("duplicate catalog id '" + id + "'");
  }

  Catalog c{std::move(ids), std::move(attribute_names), std::move(attributes)};
  int area = c.attribute_index("A");
  if (area >= 0) {
    for (int i = 0; i < c.size(); ++i) {
      if (c.attributes(i, area) <= 0.0)
        throw ValidationError("instance '" + c.ids[static_cast<std::size_t>(i)] +
                              "' has non-positive area");
    }
  }
  return c;
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open catalog file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("catalog file '" + path.string() + "' is empty");
  auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "A" || header[2] != "Iy" ||
      header[3] != "Iz" || (header.size() == 5 && header[4] != "Jx") || header.size() > 5) {
    throw ParseError("catalog header must be 'id,A,Iy,Iz[,Jx]', got '" + line + "'");
  }
  const std::size_t ncols = header.size();

  std::vector<std::string> ids;
  std::vector<double> values;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != ncols)
      throw ParseError("catalog line " + std::to_string(lineno) + ": expected " +
                       std::to_string(ncols) + " cells, got " + std::to_string(cells.size()));
    ids.push_back(cells[0]);
    for (std::size_t j = 1; j < ncols; ++j) {
      try {
        std::size_t pos = 0;
        double v = std::stod(cells[j], &pos);
        if (pos != cells[j].size()) throw std::invalid_argument("trailing junk");
        values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("catalog line " + std::to_string(lineno) + ", column '" + header[j] +
                         "': cannot parse '" + cells[j] + "' as a number");
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto m = static_cast<Eigen::Index>(ncols - 1);
  Eigen::MatrixXd attr(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      attr(i, j) = values[static_cast<std::size_t>(i * m + j)];

  return make_catalog(std::move(ids), {header.begin() + 1, header.end()}, std::move(attr));
}

void save_catalog(const Catalog& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write catalog file '" + path.string() + "'");
  out << "id";
  for (const auto& name : c.attribute_names) out << "," << name;
  out << "\n";
  char buf[64];
  for (int i = 0; i < c.size(); ++i) {
    out << c.ids[static_cast<std::size_t>(i)];
    for (int j = 0; j < c.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", c.attributes(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
}

Catalog normalize(const Catalog& c) {
  Eigen::MatrixXd scaled = c.attributes;
  for (int j = 0; j < c.dim(); ++j) {
    double lo = scaled.col(j).minCoeff();
    double hi = scaled.col(j).maxCoeff();
    if (hi > lo) {
      scaled.col(j) = (scaled.col(j).array() - lo) / (hi - lo);
    } else {
      scaled.col(j).setZero();  // constant column carries no ordering information
    }
  }
  Catalog out = c;
  out.attributes = std::move(scaled);
  return out;
}

Catalog builtin_catalog54() {
  // Parametric wide-flange (H-profile) family. Section j = (height index,
  // width-ratio index) on a 9x6 grid:
  //   h: 9 heights, geometric from 0.03 m to 0.20 m
  //   c: 6 flange-width ratios, linear from 0.50 to 1.00 (w = c*h)
  // Flange thickness tf = 0.08 h, web thickness tw = 0.05 h.
  //   A  = 2 w tf + (h - 2 tf) tw
  //   Iy = w h^3/12 - (w - tw)(h - 2 tf)^3/12       (strong axis)
  //   Iz = 2 tf w^3/12 + (h - 2 tf) tw^3/12          (weak axis)
  //   Jx = (2 w tf^3 + (h - 2 tf) tw^3) / 3          (open thin-wall torsion)
  const int nh = 9, nc = 6;
  const double h_lo = 0.03, h_hi = 0.20;
  std::vector<std::string> ids;
  Eigen::MatrixXd attr(nh * nc, 4);
  int row = 0;
  for (int ih = 0; ih < nh; ++ih) {
    double h = h_lo * std::pow(h_hi / h_lo, static_cast<double>(ih) / (nh - 1));
    for (int ic = 0; ic < nc; ++ic) {
      double c = 0.50 + 0.50 * static_cast<double>(ic) / (nc - 1);
      double w = c * h;
      double tf = 0.08 * h;
      double tw = 0.05 * h;
      double hw = h - 2.0 * tf;
      double area = 2.0 * w * tf + hw * tw;
      double iy = w * h * h * h / 12.0 - (w - tw) * hw * hw * hw / 12.0;
      double iz = 2.0 * tf * w * w * w / 12.0 + hw * tw * tw * tw / 12.0;
      double jx = (2.0 * w * tf * tf * tf + hw * tw * tw * tw) / 3.0;
      attr.row(row) << area, iy, iz, jx;
      char id[32];
      std::snprintf(id, sizeof(id), "IB%02d%c", ih + 1, static_cast<char>('a' + ic));
      ids.emplace_back(id);
      ++row;
    }
  }
  return make_catalog(std::move(ids), {"A", "Iy", "Iz", "Jx"}, std::move(attr));
}

}  // namespace cobalt
