#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cobalt {

/// A finite catalog of categorical instances, each described by a vector of
/// physical section attributes (area, moments of inertia, torsion constant).
/// Immutable after construction; safe to share read-only across threads.
struct Catalog {
  std::vector<std::string> ids;              // unique instance identifiers
  std::vector<std::string> attribute_names;  // column labels, e.g. A,Iy,Iz,Jx
  Eigen::MatrixXd attributes;                // n x M, one row per instance

  int size() const { return static_cast<int>(attributes.rows()); }
  int dim() const { return static_cast<int>(attributes.cols()); }

  int attribute_index(const std::string& name) const;
  std::uint64_t content_hash() const;
};

/// Validating constructor; throws ValidationError on any invariant breach
/// (n < 2, non-finite values, duplicate ids, non-positive area).
Catalog make_catalog(std::vector<std::string> ids,
                     std::vector<std::string> attribute_names,
                     Eigen::MatrixXd attributes);

/// Reads the catalog CSV format: header `id,A,Iy,Iz[,Jx]`, one instance per
/// row, decimal point, no thousands separators.
Catalog load_catalog(const std::filesystem::path& path);

void save_catalog(const Catalog& c, const std::filesystem::path& path);

/// Min-max scales every attribute column to [0,1]; constant columns map to
/// all zeros. Raw attribute values for structural analysis live in the
/// original catalog, which the caller keeps.
Catalog normalize(const Catalog& c);

/// The bundled 54-section catalog: a 9x6 parametric I-beam family (nine
/// section heights, six width ratios) with columns (A, Iy, Iz, Jx). See the
/// generator in catalog.cpp for the exact section formulas.
Catalog builtin_catalog54();

}  // namespace cobalt
