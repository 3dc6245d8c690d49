#include "cobalt/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>

#include <nlohmann/json.hpp>

#include "cobalt/errors.hpp"
#include "cobalt/rng.hpp"

namespace cobalt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void add_edge(std::vector<std::vector<NeighborGraph::Edge>>& adj, int i, int j, double w) {
  auto insert = [&](int from, int to) {
    auto& list = adj[static_cast<std::size_t>(from)];
    auto it = std::lower_bound(list.begin(), list.end(), to,
                               [](const NeighborGraph::Edge& e, int t) { return e.to < t; });
    if (it == list.end() || it->to != to) list.insert(it, {to, w});
  };
  insert(i, j);
  insert(j, i);
}

std::vector<int> components(const NeighborGraph& g) {
  std::vector<int> comp(static_cast<std::size_t>(g.size()), -1);
  int next = 0;
  for (int s = 0; s < g.size(); ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> stack{s};
    comp[static_cast<std::size_t>(s)] = next;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const auto& e : g.adjacency[static_cast<std::size_t>(u)]) {
        if (comp[static_cast<std::size_t>(e.to)] < 0) {
          comp[static_cast<std::size_t>(e.to)] = next;
          stack.push_back(e.to);
        }
      }
    }
    ++next;
  }
  return comp;
}

/// Symmetric k-NN graph over the rows of `points`, with greedy minimal
/// Euclidean bridging of disconnected components.
NeighborGraph knn_graph_from_points(const Eigen::MatrixXd& points, int k) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k >= n)
    throw ValidationError("neighbor count k=" + std::to_string(k) + " out of range [1," +
                          std::to_string(n - 1) + "]");

  Eigen::MatrixXd d2(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d2(i, j) = (points.row(i) - points.row(j)).squaredNorm();
  }

  NeighborGraph g;
  g.k = k;
  g.adjacency.resize(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (d2(i, a) != d2(i, b)) return d2(i, a) < d2(i, b);
      return a < b;  // deterministic tie-break
    });
    int added = 0;
    for (int idx : order) {
      if (idx == i) continue;
      add_edge(g.adjacency, i, idx, std::sqrt(d2(i, idx)));
      if (++added == k) break;
    }
  }

  // Repair: connect components with their shortest Euclidean link until one
  // component remains.
  for (;;) {
    auto comp = components(g);
    int ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
    if (ncomp <= 1) break;
    double best = kInf;
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (comp[static_cast<std::size_t>(i)] == comp[static_cast<std::size_t>(j)]) continue;
        if (d2(i, j) < best) {
          best = d2(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    add_edge(g.adjacency, bi, bj, std::sqrt(best));
    ++g.bridges_added;
  }
  return g;
}

void dijkstra(const NeighborGraph& g, int source, std::vector<double>& dist,
              std::vector<int>& parent) {
  const auto n = static_cast<std::size_t>(g.size());
  dist.assign(n, kInf);
  parent.assign(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(source)] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& e : g.adjacency[static_cast<std::size_t>(u)]) {
      double nd = d + e.weight;
      auto& cur = dist[static_cast<std::size_t>(e.to)];
      if (nd < cur) {
        cur = nd;
        parent[static_cast<std::size_t>(e.to)] = u;
        pq.emplace(nd, e.to);
      }
    }
  }
}

/// Flip each coordinate axis so its largest-magnitude entry is positive.
void apply_sign_convention(Eigen::MatrixXd& coords) {
  for (int j = 0; j < coords.cols(); ++j) {
    int imax = 0;
    double vmax = 0.0;
    for (int i = 0; i < coords.rows(); ++i) {
      double a = std::abs(coords(i, j));
      if (a > vmax) {
        vmax = a;
        imax = i;
      }
    }
    if (coords(imax, j) < 0.0) coords.col(j) = -coords.col(j);
  }
}

std::uint64_t hash_matrix(const Eigen::MatrixXd& m, std::uint64_t h) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits;
      double v = m(i, j);
      std::memcpy(&bits, &v, sizeof(bits));
      h = splitmix64(h ^ bits);
    }
  }
  return h;
}

AnchorSet lock_anchors(Eigen::MatrixXd coords, int m, double residual, std::string source,
                       double clamped_mass) {
  AnchorSet a;
  a.coords = std::move(coords);
  a.m = m;
  a.residual_stress = residual;
  a.source = std::move(source);
  a.clamped_eigen_mass = clamped_mass;
  a.content_hash = a.compute_hash();
  return a;
}

}  // namespace

std::uint64_t AnchorSet::compute_hash() const {
  return hash_matrix(coords, fnv1a64(source) ^ static_cast<std::uint64_t>(m));
}

Eigen::VectorXd TensorGrid::latent(const std::vector<int>& design) const {
  const int m = anchors->m;
  Eigen::VectorXd z(dim());
  for (int v = 0; v < e; ++v)
    z.segment(v * m, m) = anchors->coords.row(design[static_cast<std::size_t>(v)]);
  return z;
}

NeighborGraph build_knn_graph(const Catalog& normalized, int k) {
  return knn_graph_from_points(normalized.attributes, k);
}

Eigen::MatrixXd geodesic_distances(const NeighborGraph& g) {
  const int n = g.size();
  Eigen::MatrixXd d(n, n);
  std::vector<double> dist;
  std::vector<int> parent;
  for (int s = 0; s < n; ++s) {
    dijkstra(g, s, dist, parent);
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(dist[static_cast<std::size_t>(j)]))
        throw Error("neighbor graph is disconnected; connectivity repair failed");
      d(s, j) = dist[static_cast<std::size_t>(j)];
    }
  }
  d = 0.5 * (d + d.transpose());  // symmetrize away roundoff
  return d;
}

AnchorSet classical_mds(const Eigen::MatrixXd& d, int m) {
  const int n = static_cast<int>(d.rows());
  if (d.cols() != n) throw ValidationError("distance matrix must be square");
  if ((d - d.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, d.cwiseAbs().maxCoeff()))
    throw ValidationError("distance matrix must be symmetric");
  if (m < 1 || m > n - 1)
    throw ValidationError("latent dimension m=" + std::to_string(m) + " out of range [1," +
                          std::to_string(n - 1) + "]");

  // B = -1/2 J d^2 J with J = I - 11^T/n
  Eigen::MatrixXd d2 = d.array().square();
  Eigen::VectorXd row_mean = d2.rowwise().mean();
  double total_mean = d2.mean();
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      b(i, j) = -0.5 * (d2(i, j) - row_mean(i) - row_mean(j) + total_mean);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  if (es.info() != Eigen::Success) throw Error("MDS eigendecomposition failed");
  // eigenvalues ascending; walk from the top
  const Eigen::VectorXd& ev = es.eigenvalues();
  double positive_sum = 0.0, clamped = 0.0;
  for (int i = 0; i < n; ++i) {
    if (ev(i) > 0.0)
      positive_sum += ev(i);
    else
      clamped += -ev(i);
  }

  Eigen::MatrixXd coords(n, m);
  double retained = 0.0;
  for (int j = 0; j < m; ++j) {
    double lambda = ev(n - 1 - j);
    if (lambda > 0.0) {
      retained += lambda;
      coords.col(j) = es.eigenvectors().col(n - 1 - j) * std::sqrt(lambda);
    } else {
      coords.col(j).setZero();
    }
  }
  apply_sign_convention(coords);
  double residual = positive_sum > 0.0 ? 1.0 - retained / positive_sum : 0.0;
  return lock_anchors(std::move(coords), m, residual, "mds", clamped);
}

AnchorSet embed_isomap(const Catalog& raw, int k, int m) {
  Catalog norm = normalize(raw);
  NeighborGraph g = build_knn_graph(norm, k);
  Eigen::MatrixXd d = geodesic_distances(g);
  AnchorSet a = classical_mds(d, m);
  return lock_anchors(std::move(a.coords), m, a.residual_stress, "isomap", a.clamped_eigen_mass);
}

AnchorSet embed_pca(const Catalog& raw, int m) {
  if (m < 1 || m > raw.dim())
    throw ValidationError("PCA dimension m=" + std::to_string(m) + " out of range [1," +
                          std::to_string(raw.dim()) + "]");
  Catalog norm = normalize(raw);
  Eigen::MatrixXd x = norm.attributes;
  Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = x.transpose() * x / std::max(1, static_cast<int>(x.rows()) - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");
  const int mm = raw.dim();
  Eigen::MatrixXd basis(mm, m);
  double total = std::max(0.0, es.eigenvalues().sum());
  double retained = 0.0;
  for (int j = 0; j < m; ++j) {
    basis.col(j) = es.eigenvectors().col(mm - 1 - j);
    retained += std::max(0.0, es.eigenvalues()(mm - 1 - j));
  }
  Eigen::MatrixXd coords = x * basis;
  apply_sign_convention(coords);
  double residual = total > 0.0 ? 1.0 - retained / total : 0.0;
  return lock_anchors(std::move(coords), m, residual, "pca", 0.0);
}

NeighborGraph anchor_neighbors(const AnchorSet& a, int k) {
  return knn_graph_from_points(a.coords, k);
}

PathTable all_pairs_paths(const NeighborGraph& g) {
  const int n = g.size();
  PathTable t;
  t.dist.resize(n, n);
  t.next_hop.resize(n, n);
  std::vector<double> dist;
  std::vector<int> parent;
  // Dijkstra rooted at each target: the parent of u in that tree is the
  // first step from u toward the target.
  for (int target = 0; target < n; ++target) {
    dijkstra(g, target, dist, parent);
    for (int u = 0; u < n; ++u) {
      t.dist(u, target) = dist[static_cast<std::size_t>(u)];
      t.next_hop(u, target) = (u == target) ? target : parent[static_cast<std::size_t>(u)];
    }
  }
  return t;
}

void save_anchors(const AnchorSet& a, const std::vector<std::string>& ids, int k,
                  const std::filesystem::path& path) {
  if (static_cast<int>(ids.size()) != a.size())
    throw ValidationError("anchor id count does not match anchor rows");
  std::ofstream out(path);
  if (!out) throw Error("cannot write anchor file '" + path.string() + "'");
  out << "id";
  for (int j = 0; j < a.m; ++j) out << ",b" << (j + 1);
  out << "\n";
  char buf[64];
  for (int i = 0; i < a.size(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (int j = 0; j < a.m; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", a.coords(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
  nlohmann::json meta{{"method", a.source},
                      {"k", k},
                      {"m", a.m},
                      {"residual_stress", a.residual_stress},
                      {"clamped_eigen_mass", a.clamped_eigen_mass},
                      {"content_hash", a.content_hash}};
  std::ofstream mout(path.string() + ".meta.json");
  if (!mout) throw Error("cannot write anchor metadata sidecar");
  mout << meta.dump(2) << "\n";
}

}  // namespace cobalt
