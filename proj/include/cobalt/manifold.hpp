#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cobalt/catalog.hpp"

namespace cobalt {

/// Symmetric weighted k-nearest-neighbor graph. Edge weights are Euclidean
/// distances in the space the graph was built over. Disconnected graphs are
/// repaired at construction by adding the shortest inter-component links,
/// so downstream code may assume connectivity.
struct NeighborGraph {
  struct Edge {
    int to;
    double weight;
  };
  std::vector<std::vector<Edge>> adjacency;  // per node, sorted by `to`
  int k = 0;
  int bridges_added = 0;  // connectivity repairs performed

  int size() const { return static_cast<int>(adjacency.size()); }
};

/// Latent coordinates of all catalog instances, locked at construction.
/// `content_hash` is recorded at lock time; `compute_hash()` must match it
/// at any later point.
struct AnchorSet {
  Eigen::MatrixXd coords;  // n x m
  int m = 0;
  double residual_stress = 0.0;
  std::string source;            // embedding method tag
  double clamped_eigen_mass = 0.0;  // magnitude of negative eigenvalues dropped
  std::uint64_t content_hash = 0;

  int size() const { return static_cast<int>(coords.rows()); }
  std::uint64_t compute_hash() const;
};

/// The discrete design domain: e categorical variables sharing one anchor
/// set. A design assigns one anchor index per variable; its latent
/// realization is the concatenation of the chosen anchor coordinates.
struct TensorGrid {
  std::shared_ptr<const AnchorSet> anchors;
  int e = 0;

  int dim() const { return anchors->m * e; }
  int anchors_per_variable() const { return anchors->size(); }

  /// Latent realization of a design (length m*e).
  Eigen::VectorXd latent(const std::vector<int>& design) const;
};

/// Symmetric k-NN graph over normalized attribute rows (1 <= k < n).
NeighborGraph build_knn_graph(const Catalog& normalized, int k);

/// All-pairs shortest-path distances over the graph (Dijkstra per source).
Eigen::MatrixXd geodesic_distances(const NeighborGraph& g);

/// Classical multidimensional scaling of a symmetric distance matrix:
/// double-centered Gram matrix, eigendecomposition, top-m axes scaled by
/// sqrt of the (clamped-nonnegative) eigenvalues. Axes follow a fixed sign
/// convention: the largest-magnitude entry of each axis is positive.
AnchorSet classical_mds(const Eigen::MatrixXd& d, int m);

/// Full Isomap pipeline on a raw catalog: normalize, k-NN graph, geodesics,
/// classical MDS. Deterministic: identical inputs give bit-identical coords.
AnchorSet embed_isomap(const Catalog& raw, int k, int m);

/// PCA baseline embedding (mean-centered covariance eigendecomposition of
/// the normalized attributes, top-m projection, same sign convention).
AnchorSet embed_pca(const Catalog& raw, int m);

/// Latent-space k-NN graph over anchor coordinates; same repair rule as
/// build_knn_graph.
NeighborGraph anchor_neighbors(const AnchorSet& a, int k);

/// All-pairs shortest paths with next-hop pointers, used by the discrete
/// acquisition search to walk geodesic pathways of the anchored network.
struct PathTable {
  Eigen::MatrixXd dist;      // n x n geodesic distances
  Eigen::MatrixXi next_hop;  // next_hop(i,j) = first step from i toward j
};
PathTable all_pairs_paths(const NeighborGraph& g);

/// Writes `id,b1,...,bm` rows plus a JSON metadata sidecar
/// (`<path>.meta.json`) with method, k, m, residual stress and content hash.
void save_anchors(const AnchorSet& a, const std::vector<std::string>& ids,
                  int k, const std::filesystem::path& path);

}  // namespace cobalt
