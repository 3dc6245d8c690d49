#include "cobalt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "cobalt/errors.hpp"

namespace cobalt {

namespace {

double latent_span(const AnchorSet& anchors) {
  double span = 0.0;
  for (int j = 0; j < anchors.m; ++j)
    span = std::max(span, anchors.coords.col(j).maxCoeff() - anchors.coords.col(j).minCoeff());
  return span;
}

double median_nearest_spacing(const AnchorSet& anchors) {
  const int n = anchors.size();
  std::vector<double> nearest(static_cast<std::size_t>(n),
                              std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double d = (anchors.coords.row(i) - anchors.coords.row(j)).norm();
      nearest[static_cast<std::size_t>(i)] = std::min(nearest[static_cast<std::size_t>(i)], d);
    }
  }
  std::sort(nearest.begin(), nearest.end());
  return nearest[static_cast<std::size_t>(n / 2)];
}

/// Memoized per-edge LCB contributions, keyed by the anchor pair selected
/// for the edge's two variables. Kernel moments depend only on that pair,
/// which collapses the cost of scoring a whole population.
class EdgeContributionCache {
 public:
  EdgeContributionCache(const SurrogatePosterior& post, const TensorGrid& grid, double kappa)
      : post_(post), grid_(grid), kappa_(kappa) {}

  double score(const Design& design) {
    double acc = post_.mean_offset();
    const auto& comps = post_.components();
    for (std::size_t c = 0; c < comps.size(); ++c) {
      acc += contribution(static_cast<int>(c), design[static_cast<std::size_t>(comps[c].u)],
                          design[static_cast<std::size_t>(comps[c].v)]);
    }
    return acc;
  }

 private:
  double contribution(int comp, int ju, int jv) {
    const std::uint64_t n = static_cast<std::uint64_t>(grid_.anchors_per_variable());
    std::uint64_t key = (static_cast<std::uint64_t>(comp) * n + static_cast<std::uint64_t>(ju)) * n +
                        static_cast<std::uint64_t>(jv);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;

    const int m = grid_.anchors->m;
    const bool univariate = post_.components()[static_cast<std::size_t>(comp)].univariate();
    Eigen::VectorXd zc(univariate ? m : 2 * m);
    zc.head(m) = grid_.anchors->coords.row(ju);
    if (!univariate) zc.tail(m) = grid_.anchors->coords.row(jv);
    auto mom = post_.component_moments(comp, zc);
    double value = mom.mean - kappa_ * mom.sd;
    memo_.emplace(key, value);
    return value;
  }

  const SurrogatePosterior& post_;
  const TensorGrid& grid_;
  double kappa_;
  std::unordered_map<std::uint64_t, double> memo_;
};

}  // namespace

TrustRegion make_trust_region(const TensorGrid& grid, const Design& center,
                              const TrustRegionConstants& constants) {
  const auto& anchors = *grid.anchors;
  double span = latent_span(anchors);
  TrustRegion tr;
  tr.center = center;
  tr.center_latent = grid.latent(center);
  tr.l_init = constants.init_frac * span;
  tr.l_max = constants.max_frac * span;
  tr.l_min = constants.min_spacing_mult * median_nearest_spacing(anchors);
  tr.length = tr.l_init;
  tr.success_tolerance = constants.success_tolerance;
  tr.fail_tolerance = constants.fail_tolerance;
  return tr;
}

void recenter(TrustRegion& tr, const TensorGrid& grid, const Design& incumbent) {
  tr.center = incumbent;
  tr.center_latent = grid.latent(incumbent);
}

TrustRegion update_trust_region(TrustRegion tr, bool improved) {
  if (improved) {
    tr.fail_count = 0;
    if (++tr.success_count >= tr.success_tolerance) {
      tr.length = std::min(2.0 * tr.length, tr.l_max);
      tr.success_count = 0;
    }
  } else {
    tr.success_count = 0;
    if (++tr.fail_count >= tr.fail_tolerance) {
      double halved = 0.5 * tr.length;
      if (halved >= tr.l_min) {
        tr.length = halved;
      } else if (tr.length > tr.l_min) {
        tr.length = tr.l_min;
      } else {
        tr.length = tr.l_init;  // at the floor: restart at full size
      }
      tr.fail_count = 0;
    }
  }
  return tr;
}

double lcb(const Prediction& pred, double kappa) {
  if (kappa < 0.0) throw ValidationError("kappa must be nonnegative");
  double acc = pred.mean_offset;
  for (Eigen::Index c = 0; c < pred.edge_means.size(); ++c)
    acc += pred.edge_means(c) - kappa * pred.edge_sds(c);
  return acc;
}

std::vector<std::vector<int>> admissible_anchors(const TensorGrid& grid, const TrustRegion& tr) {
  const auto& anchors = *grid.anchors;
  const int m = anchors.m;
  const double half = 0.5 * tr.length;
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(grid.e));
  for (int v = 0; v < grid.e; ++v) {
    Eigen::VectorXd center = tr.center_latent.segment(v * m, m);
    auto& set = sets[static_cast<std::size_t>(v)];
    for (int j = 0; j < anchors.size(); ++j) {
      double cheb = (anchors.coords.row(j).transpose() - center).cwiseAbs().maxCoeff();
      if (cheb <= half) set.push_back(j);
    }
    int own = tr.center[static_cast<std::size_t>(v)];
    if (!std::binary_search(set.begin(), set.end(), own)) {
      set.insert(std::lower_bound(set.begin(), set.end(), own), own);
    }
  }
  return sets;
}

AcquisitionResult maximize_acquisition(const SurrogatePosterior& post, const TrustRegion& tr,
                                       const TensorGrid& grid, const NeighborGraph& anchor_graph,
                                       const PathTable& anchor_paths, double kappa,
                                       const EvoConfig& evo, const std::set<Design>& evaluated,
                                       Rng& rng) {
  const auto sets = admissible_anchors(grid, tr);
  const int e = grid.e;

  double total_combos = 1.0;
  for (const auto& s : sets) total_combos *= static_cast<double>(s.size());
  if (total_combos <= 1.0) {
    AcquisitionResult res;
    res.design = tr.center;
    EdgeContributionCache cache(post, grid, kappa);
    res.lcb_value = cache.score(res.design);
    res.stalled = true;
    res.previously_seen = evaluated.count(res.design) > 0;
    return res;
  }

  EdgeContributionCache cache(post, grid, kappa);

  struct Scored {
    Design design;
    double value;
    bool seen;
  };
  auto better = [](const Scored& a, const Scored& b) {
    if (a.value != b.value) return a.value < b.value;
    return !a.seen && b.seen;  // unseen wins ties
  };

  auto make_scored = [&](Design d) {
    Scored s{std::move(d), 0.0, false};
    s.value = cache.score(s.design);
    s.seen = evaluated.count(s.design) > 0;
    return s;
  };

  auto uniform_admissible = [&]() {
    Design d(static_cast<std::size_t>(e));
    for (int v = 0; v < e; ++v) {
      const auto& s = sets[static_cast<std::size_t>(v)];
      d[static_cast<std::size_t>(v)] = s[rng.uniform_index(s.size())];
    }
    return d;
  };

  const int pop_size = std::max(2, evo.population);
  std::vector<Scored> population;
  population.reserve(static_cast<std::size_t>(pop_size));
  population.push_back(make_scored(tr.center));
  while (static_cast<int>(population.size()) < pop_size)
    population.push_back(make_scored(uniform_admissible()));

  Scored best = population.front();
  bool have_unseen = false;
  Scored best_unseen;
  auto track = [&](const Scored& s) {
    if (better(s, best)) best = s;
    if (!s.seen && (!have_unseen || s.value < best_unseen.value)) {
      best_unseen = s;
      have_unseen = true;
    }
  };
  for (const auto& s : population) track(s);

  auto tournament = [&]() -> const Scored& {
    const Scored* winner = nullptr;
    for (int i = 0; i < 3; ++i) {
      const Scored& c = population[rng.uniform_index(population.size())];
      if (winner == nullptr || better(c, *winner)) winner = &c;
    }
    return *winner;
  };

  for (int g = 0; g < evo.generations; ++g) {
    // Population best drives geodesic drift this generation.
    const Scored* pop_best = &population.front();
    for (const auto& s : population) {
      if (better(s, *pop_best)) pop_best = &s;
    }
    Design drift_target = pop_best->design;

    std::vector<Scored> next;
    next.reserve(static_cast<std::size_t>(pop_size));
    next.push_back(*pop_best);  // elitism

    while (static_cast<int>(next.size()) < pop_size) {
      const Scored& pa = tournament();
      const Scored& pb = tournament();
      Design child = pa.design;
      for (int v = 0; v < e; ++v) {
        if (rng.uniform() < 0.5) child[static_cast<std::size_t>(v)] = pb.design[static_cast<std::size_t>(v)];
      }
      // Neighbor mutation: step one variable to a random admissible
      // latent-graph neighbor.
      for (int v = 0; v < e; ++v) {
        if (rng.uniform() >= evo.p_mut) continue;
        const auto& adj = anchor_graph.adjacency[static_cast<std::size_t>(
            child[static_cast<std::size_t>(v)])];
        const auto& s = sets[static_cast<std::size_t>(v)];
        std::vector<int> options;
        for (const auto& edge : adj) {
          if (std::binary_search(s.begin(), s.end(), edge.to)) options.push_back(edge.to);
        }
        if (!options.empty())
          child[static_cast<std::size_t>(v)] = options[rng.uniform_index(options.size())];
      }
      // Geodesic drift: one variable moves one shortest-path hop toward the
      // population best's anchor.
      {
        int v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(e)));
        int cur = child[static_cast<std::size_t>(v)];
        int target = drift_target[static_cast<std::size_t>(v)];
        if (cur != target) {
          int hop = anchor_paths.next_hop(cur, target);
          const auto& s = sets[static_cast<std::size_t>(v)];
          if (hop >= 0 && std::binary_search(s.begin(), s.end(), hop))
            child[static_cast<std::size_t>(v)] = hop;
        }
      }
      Scored sc = make_scored(std::move(child));
      track(sc);
      next.push_back(std::move(sc));
    }
    population = std::move(next);
  }

  // Contract: hand back an unevaluated design whenever one exists. The
  // search may have visited only seen designs; on small regions fall back to
  // scanning the grid for the best unseen candidate.
  if (!have_unseen && total_combos <= 4096.0) {
    Design d(static_cast<std::size_t>(e));
    std::vector<std::size_t> idx(static_cast<std::size_t>(e), 0);
    for (;;) {
      for (int v = 0; v < e; ++v)
        d[static_cast<std::size_t>(v)] = sets[static_cast<std::size_t>(v)][idx[static_cast<std::size_t>(v)]];
      if (!evaluated.count(d)) track(make_scored(d));
      int v = 0;
      while (v < e && ++idx[static_cast<std::size_t>(v)] ==
                          sets[static_cast<std::size_t>(v)].size()) {
        idx[static_cast<std::size_t>(v)] = 0;
        ++v;
      }
      if (v == e) break;
    }
  }

  const Scored& chosen = have_unseen ? best_unseen : best;
  AcquisitionResult res;
  res.design = chosen.design;
  res.lcb_value = chosen.value;
  res.stalled = false;
  res.previously_seen = chosen.seen;
  return res;
}

}  // namespace cobalt
