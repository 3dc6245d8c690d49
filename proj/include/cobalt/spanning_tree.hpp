#pragma once

#include <utility>
#include <vector>

#include "cobalt/rng.hpp"

namespace cobalt {

/// Undirected spanning tree over the e categorical variables. Edges are
/// normalized (u < v) and sorted; e = 1 yields an empty edge set and the
/// surrogate falls back to a single univariate component.
struct TreeDecomposition {
  int e = 0;
  std::vector<std::pair<int, int>> edges;  // e-1 edges
};

/// Uniform sample over all e^(e-2) labeled trees via a random Pruefer
/// sequence (exact uniformity, O(e log e)).
TreeDecomposition sample_spanning_tree(int e, Rng& rng);

/// Decodes a Pruefer sequence of length e-2 into its labeled tree. Exposed
/// so tests can enumerate the full tree population.
TreeDecomposition decode_pruefer(int e, const std::vector<int>& sequence);

/// Union-find check: connected, acyclic, covers all e vertices.
bool is_spanning_tree(const TreeDecomposition& t);

}  // namespace cobalt
