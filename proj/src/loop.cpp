#include "cobalt/loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cobalt/errors.hpp"

namespace cobalt {

namespace {

Design uniform_design(int e, int n, Rng& rng) {
  Design d(static_cast<std::size_t>(e));
  for (auto& idx : d) idx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  return d;
}

Observation failed_observation(const Design& design, std::uint64_t seed, int n_mc) {
  Observation obs;
  obs.design = design;
  obs.y_obs = std::numeric_limits<double>::infinity();
  obs.feasible = false;
  obs.failed = true;
  obs.seed = seed;
  obs.n_mc = n_mc;
  return obs;
}

}  // namespace

int select_incumbent_index(const std::vector<Observation>& obs) {
  if (obs.empty()) throw ValidationError("cannot select an incumbent from zero observations");
  int best_feasible = -1;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    if (o.failed || !o.feasible) continue;
    if (best_feasible < 0 || o.y_obs < obs[static_cast<std::size_t>(best_feasible)].y_obs)
      best_feasible = static_cast<int>(i);
  }
  if (best_feasible >= 0) return best_feasible;

  int best = -1;
  double best_violation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].failed) continue;
    double v = obs[i].total_violation();
    if (v < best_violation) {
      best_violation = v;
      best = static_cast<int>(i);
    }
  }
  return best >= 0 ? best : 0;
}

Design select_incumbent(const std::vector<Observation>& obs) {
  return obs[static_cast<std::size_t>(select_incumbent_index(obs))].design;
}

Problem load_problem(const RunConfig& cfg) {
  Problem p;
  p.structure = load_structure(cfg.structure_path);
  p.catalog = load_catalog(cfg.catalog_path);

  std::shared_ptr<AnchorSet> anchors;
  if (cfg.embed_method == "isomap") {
    anchors = std::make_shared<AnchorSet>(embed_isomap(p.catalog, cfg.embed_k, cfg.embed_m));
  } else if (cfg.embed_method == "pca") {
    anchors = std::make_shared<AnchorSet>(embed_pca(p.catalog, cfg.embed_m));
  } else {
    throw ValidationError("unknown embedding method '" + cfg.embed_method + "'");
  }
  p.anchors = anchors;
  p.grid = TensorGrid{p.anchors, p.structure.group_count()};
  p.anchor_graph = anchor_neighbors(*p.anchors, cfg.graph_k);
  p.anchor_paths = all_pairs_paths(p.anchor_graph);
  return p;
}

RunResult run_cobalt(const RunConfig& cfg) {
  Problem problem = load_problem(cfg);
  const int e = problem.structure.group_count();
  const int n = problem.catalog.size();
  const int init = cfg.init_count > 0 ? cfg.init_count : 2 * e + 2;
  if (cfg.budget < init || init < 1)
    throw ValidationError("budget must satisfy budget >= init >= 1 (budget=" +
                          std::to_string(cfg.budget) + ", init=" + std::to_string(init) + ")");

  OracleConfig oracle = cfg.oracle;
  oracle.threads = cfg.threads;

  RunResult result;
  result.method = "cobalt";
  result.catalog_hash = problem.catalog.content_hash();
  result.anchors_hash = problem.anchors->content_hash;
  result.residual_stress = problem.anchors->residual_stress;
  result.embedding_e = e;

  std::set<Design> evaluated;
  auto evaluate = [&](const Design& design, int eval_index) {
    std::uint64_t obs_seed = derive_seed(cfg.seed, "oracle", static_cast<std::uint64_t>(eval_index));
    Observation obs;
    try {
      obs = evaluate_robust(problem.structure, problem.catalog, design, oracle, obs_seed);
    } catch (const Error&) {
      obs = failed_observation(design, obs_seed, oracle.n_mc);
    }
    evaluated.insert(design);
    result.observations.push_back(std::move(obs));
    result.latent_visits.push_back(problem.grid.latent(design));
    result.incumbent_trajectory.push_back(select_incumbent_index(result.observations));
  };

  for (int i = 0; i < init; ++i) {
    Rng rng(derive_seed(cfg.seed, "init", static_cast<std::uint64_t>(i)));
    evaluate(uniform_design(e, n, rng), i);
  }

  int incumbent = result.incumbent_trajectory.back();
  TrustRegion tr =
      make_trust_region(problem.grid, result.observations[static_cast<std::size_t>(incumbent)].design,
                        cfg.tr);

  for (int t = init; t < cfg.budget; ++t) {
    const std::uint64_t iter = static_cast<std::uint64_t>(t - init);
    IterationRecord rec;
    rec.eval_index = t;
    rec.tr_length = tr.length;

    Rng tree_rng(derive_seed(cfg.seed, "tree", iter));
    rec.tree = sample_spanning_tree(e, tree_rng);

    // Assemble training data from non-failed observations.
    std::vector<int> usable;
    for (std::size_t i = 0; i < result.observations.size(); ++i) {
      if (!result.observations[i].failed) usable.push_back(static_cast<int>(i));
    }

    Design next;
    if (usable.size() >= 2) {
      GpData data;
      data.z.resize(static_cast<Eigen::Index>(usable.size()), problem.grid.dim());
      data.y.resize(static_cast<Eigen::Index>(usable.size()));
      data.noise_var.resize(static_cast<Eigen::Index>(usable.size()));
      for (std::size_t i = 0; i < usable.size(); ++i) {
        const auto& o = result.observations[static_cast<std::size_t>(usable[i])];
        data.z.row(static_cast<Eigen::Index>(i)) = problem.grid.latent(o.design);
        data.y(static_cast<Eigen::Index>(i)) = o.y_obs;
        data.noise_var(static_cast<Eigen::Index>(i)) = o.noise_var;
      }
      McmcConfig mcmc = cfg.mcmc;
      mcmc.seed = derive_seed(cfg.seed, "mcmc", iter);
      try {
        SurrogatePosterior post = SurrogatePosterior::fit(std::move(data), rec.tree,
                                                          problem.anchors->m, mcmc);
        rec.max_rhat = post.diagnostics().rhat.size() > 0 ? post.diagnostics().rhat.maxCoeff() : 0.0;
        rec.mean_accept = post.diagnostics().mean_accept;
        rec.divergences = post.diagnostics().divergences;
        Rng acq_rng(derive_seed(cfg.seed, "acq", iter));
        AcquisitionResult acq =
            maximize_acquisition(post, tr, problem.grid, problem.anchor_graph,
                                 problem.anchor_paths, cfg.kappa, cfg.evo, evaluated, acq_rng);
        rec.acq_value = acq.lcb_value;
        rec.stalled = acq.stalled;
        next = acq.design;
      } catch (const Error&) {
        rec.fit_fallback = true;
      }
    } else {
      rec.fit_fallback = true;
    }

    if (rec.fit_fallback) {
      // Surrogate unavailable: draw a random design inside the trust region.
      Rng rng(derive_seed(cfg.seed, "fallback", iter));
      auto sets = admissible_anchors(problem.grid, tr);
      next.resize(static_cast<std::size_t>(e));
      for (int v = 0; v < e; ++v) {
        const auto& s = sets[static_cast<std::size_t>(v)];
        next[static_cast<std::size_t>(v)] = s[rng.uniform_index(s.size())];
      }
    }

    evaluate(next, t);
    int new_incumbent = result.incumbent_trajectory.back();
    bool improved = new_incumbent == static_cast<int>(result.observations.size()) - 1;
    incumbent = new_incumbent;
    tr = update_trust_region(std::move(tr), improved);
    if (improved)
      recenter(tr, problem.grid,
               result.observations[static_cast<std::size_t>(incumbent)].design);
    result.iterations.push_back(std::move(rec));
  }

  result.best_index = incumbent;
  result.has_feasible = std::any_of(result.observations.begin(), result.observations.end(),
                                    [](const Observation& o) { return !o.failed && o.feasible; });
  return result;
}

}  // namespace cobalt
