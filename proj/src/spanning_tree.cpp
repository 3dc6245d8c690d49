#include "cobalt/spanning_tree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "cobalt/errors.hpp"

namespace cobalt {

TreeDecomposition decode_pruefer(int e, const std::vector<int>& sequence) {
  if (e < 1) throw ValidationError("tree needs at least one vertex");
  TreeDecomposition t;
  t.e = e;
  if (e == 1) return t;
  if (static_cast<int>(sequence.size()) != e - 2)
    throw ValidationError("Pruefer sequence for e vertices must have length e-2");

  std::vector<int> degree(static_cast<std::size_t>(e), 1);
  for (int v : sequence) {
    if (v < 0 || v >= e) throw ValidationError("Pruefer label out of range");
    ++degree[static_cast<std::size_t>(v)];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
  for (int v = 0; v < e; ++v) {
    if (degree[static_cast<std::size_t>(v)] == 1) leaves.push(v);
  }
  for (int v : sequence) {
    int leaf = leaves.top();
    leaves.pop();
    t.edges.emplace_back(std::min(leaf, v), std::max(leaf, v));
    if (--degree[static_cast<std::size_t>(v)] == 1) leaves.push(v);
  }
  int a = leaves.top();
  leaves.pop();
  int b = leaves.top();
  t.edges.emplace_back(std::min(a, b), std::max(a, b));
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

TreeDecomposition sample_spanning_tree(int e, Rng& rng) {
  if (e < 1) throw ValidationError("tree needs at least one vertex");
  std::vector<int> seq(static_cast<std::size_t>(std::max(0, e - 2)));
  for (auto& v : seq) v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(e)));
  return decode_pruefer(e, seq);
}

bool is_spanning_tree(const TreeDecomposition& t) {
  if (t.e < 1) return false;
  if (static_cast<int>(t.edges.size()) != t.e - 1) return false;
  std::vector<int> parent(static_cast<std::size_t>(t.e));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const auto& [u, v] : t.edges) {
    if (u < 0 || u >= t.e || v < 0 || v >= t.e || u == v) return false;
    int ru = find(u), rv = find(v);
    if (ru == rv) return false;  // cycle
    parent[static_cast<std::size_t>(ru)] = rv;
  }
  return true;  // e-1 acyclic edges over e vertices => connected
}

}  // namespace cobalt
