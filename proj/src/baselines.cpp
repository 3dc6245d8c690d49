#include "cobalt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cobalt/errors.hpp"

namespace cobalt {

namespace {

struct Harness {
  Problem problem;
  OracleConfig oracle;
  std::uint64_t seed;
  RunResult result;
  std::set<Design> evaluated;

  Harness(const RunConfig& cfg, std::string method) : seed(cfg.seed) {
    problem = load_problem(cfg);
    oracle = cfg.oracle;
    oracle.threads = cfg.threads;
    result.method = std::move(method);
    result.catalog_hash = problem.catalog.content_hash();
    result.anchors_hash = problem.anchors->content_hash;
    result.residual_stress = problem.anchors->residual_stress;
    result.embedding_e = problem.structure.group_count();
  }

  const Observation& evaluate(const Design& design) {
    int eval_index = static_cast<int>(result.observations.size());
    std::uint64_t obs_seed = derive_seed(seed, "oracle", static_cast<std::uint64_t>(eval_index));
    Observation obs;
    try {
      obs = evaluate_robust(problem.structure, problem.catalog, design, oracle, obs_seed);
    } catch (const Error&) {
      obs.design = design;
      obs.y_obs = std::numeric_limits<double>::infinity();
      obs.failed = true;
      obs.seed = obs_seed;
      obs.n_mc = oracle.n_mc;
    }
    evaluated.insert(design);
    result.observations.push_back(std::move(obs));
    result.latent_visits.push_back(problem.grid.latent(design));
    result.incumbent_trajectory.push_back(select_incumbent_index(result.observations));
    return result.observations.back();
  }

  void finish() {
    result.best_index = result.incumbent_trajectory.back();
    result.has_feasible = std::any_of(result.observations.begin(), result.observations.end(),
                                      [](const Observation& o) { return !o.failed && o.feasible; });
  }
};

Design uniform_design(int e, int n, Rng& rng) {
  Design d(static_cast<std::size_t>(e));
  for (auto& idx : d) idx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  return d;
}

}  // namespace

RunResult run_random_search(const RunConfig& cfg) {
  Harness h(cfg, "rs");
  const int e = h.problem.structure.group_count();
  const int n = h.problem.catalog.size();
  const double total_combos = std::pow(static_cast<double>(n), e);

  for (int t = 0; t < cfg.budget; ++t) {
    Rng rng(derive_seed(cfg.seed, "rs", static_cast<std::uint64_t>(t)));
    Design d = uniform_design(e, n, rng);
    if (cfg.rs_dedupe && static_cast<double>(h.evaluated.size()) < total_combos) {
      while (h.evaluated.count(d)) d = uniform_design(e, n, rng);
    }
    h.evaluate(d);
  }
  h.finish();
  return h.result;
}

RunResult run_ga(const RunConfig& cfg) {
  Harness h(cfg, "ga");
  const int e = h.problem.structure.group_count();
  const int n = h.problem.catalog.size();
  const int pop_size = std::max(2, cfg.ga.population);
  const double mutation_rate =
      cfg.ga.mutation_rate >= 0.0 ? cfg.ga.mutation_rate : 1.0 / static_cast<double>(e);

  auto fitness = [&](const Observation& o) {
    if (o.failed) return std::numeric_limits<double>::infinity();
    return o.y_obs + cfg.ga.penalty_weight * o.total_violation();
  };

  struct Individual {
    Design design;
    double fit = 0.0;
  };

  Rng rng(derive_seed(cfg.seed, "ga"));
  std::vector<Individual> population;
  for (int i = 0; i < pop_size && static_cast<int>(h.result.observations.size()) < cfg.budget;
       ++i) {
    Individual ind{uniform_design(e, n, rng), 0.0};
    ind.fit = fitness(h.evaluate(ind.design));
    population.push_back(std::move(ind));
  }

  while (static_cast<int>(h.result.observations.size()) < cfg.budget) {
    auto tournament = [&]() -> const Individual& {
      const Individual* best = nullptr;
      for (int i = 0; i < 3; ++i) {
        const Individual& c = population[rng.uniform_index(population.size())];
        if (best == nullptr || c.fit < best->fit) best = &c;
      }
      return *best;
    };

    int elite = 0;
    for (std::size_t i = 1; i < population.size(); ++i) {
      if (population[i].fit < population[static_cast<std::size_t>(elite)].fit)
        elite = static_cast<int>(i);
    }

    std::vector<Individual> next;
    next.push_back(population[static_cast<std::size_t>(elite)]);  // carried, not re-evaluated
    while (static_cast<int>(next.size()) < pop_size &&
           static_cast<int>(h.result.observations.size()) < cfg.budget) {
      const Individual& pa = tournament();
      const Individual& pb = tournament();
      Design child = pa.design;
      if (rng.uniform() < cfg.ga.crossover_rate) {
        for (int v = 0; v < e; ++v) {
          if (rng.uniform() < 0.5) child[static_cast<std::size_t>(v)] =
              pb.design[static_cast<std::size_t>(v)];
        }
      }
      for (int v = 0; v < e; ++v) {
        if (rng.uniform() < mutation_rate)
          child[static_cast<std::size_t>(v)] =
              static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
      }
      Individual ind{std::move(child), 0.0};
      ind.fit = fitness(h.evaluate(ind.design));
      next.push_back(std::move(ind));
    }
    population = std::move(next);
  }
  h.finish();
  return h.result;
}

RunResult run_crbo(const RunConfig& cfg) {
  Harness h(cfg, "crbo");
  const int e = h.problem.structure.group_count();
  const int n = h.problem.catalog.size();
  const int m = h.problem.anchors->m;
  const int dim = h.problem.grid.dim();
  const int init = cfg.init_count > 0 ? cfg.init_count : 2 * e + 2;
  if (cfg.budget < init || init < 1)
    throw ValidationError("budget must satisfy budget >= init >= 1");

  for (int i = 0; i < init; ++i) {
    Rng rng(derive_seed(cfg.seed, "init", static_cast<std::uint64_t>(i)));
    h.evaluate(uniform_design(e, n, rng));
  }

  // Continuous bounding box of the tensor grid, tiled per variable.
  Eigen::VectorXd lo(dim), hi(dim);
  for (int v = 0; v < e; ++v) {
    for (int j = 0; j < m; ++j) {
      lo(v * m + j) = h.problem.anchors->coords.col(j).minCoeff();
      hi(v * m + j) = h.problem.anchors->coords.col(j).maxCoeff();
    }
  }

  for (int t = init; t < cfg.budget; ++t) {
    const std::uint64_t iter = static_cast<std::uint64_t>(t - init);
    IterationRecord rec;
    rec.eval_index = t;

    Rng tree_rng(derive_seed(cfg.seed, "tree", iter));
    rec.tree = sample_spanning_tree(e, tree_rng);

    std::vector<int> usable;
    for (std::size_t i = 0; i < h.result.observations.size(); ++i) {
      if (!h.result.observations[i].failed) usable.push_back(static_cast<int>(i));
    }

    Design next;
    if (usable.size() >= 2) {
      GpData data;
      data.z.resize(static_cast<Eigen::Index>(usable.size()), dim);
      data.y.resize(static_cast<Eigen::Index>(usable.size()));
      data.noise_var.resize(static_cast<Eigen::Index>(usable.size()));
      for (std::size_t i = 0; i < usable.size(); ++i) {
        const auto& o = h.result.observations[static_cast<std::size_t>(usable[i])];
        data.z.row(static_cast<Eigen::Index>(i)) = h.problem.grid.latent(o.design);
        data.y(static_cast<Eigen::Index>(i)) = o.y_obs;
        data.noise_var(static_cast<Eigen::Index>(i)) = o.noise_var;
      }
      McmcConfig mcmc = cfg.mcmc;
      mcmc.seed = derive_seed(cfg.seed, "mcmc", iter);
      try {
        SurrogatePosterior post = SurrogatePosterior::fit(std::move(data), rec.tree, m, mcmc);
        rec.max_rhat = post.diagnostics().rhat.size() > 0 ? post.diagnostics().rhat.maxCoeff() : 0.0;

        auto objective = [&](const Eigen::VectorXd& z) { return lcb(post.predict(z), cfg.kappa); };

        // Multi-start coordinate descent over the continuous box.
        Rng rng(derive_seed(cfg.seed, "crbo-acq", iter));
        Eigen::VectorXd best_x;
        double best_val = std::numeric_limits<double>::infinity();
        for (int r = 0; r < cfg.crbo.restarts; ++r) {
          Eigen::VectorXd x(dim);
          for (int d = 0; d < dim; ++d) x(d) = rng.uniform(lo(d), hi(d));
          Eigen::VectorXd step = 0.25 * (hi - lo);
          double val = objective(x);
          for (int s = 0; s < cfg.crbo.steps; ++s) {
            int d = s % dim;
            bool moved = false;
            for (double dir : {1.0, -1.0}) {
              Eigen::VectorXd cand = x;
              cand(d) = std::clamp(cand(d) + dir * step(d), lo(d), hi(d));
              double cv = objective(cand);
              if (cv < val) {
                val = cv;
                x = cand;
                moved = true;
                break;
              }
            }
            if (!moved) step(d) *= 0.5;
          }
          if (val < best_val) {
            best_val = val;
            best_x = x;
          }
        }
        rec.acq_value = best_val;

        // Nearest-anchor rounding per variable (ties to the lower index).
        next.resize(static_cast<std::size_t>(e));
        double displacement2 = 0.0;
        for (int v = 0; v < e; ++v) {
          Eigen::VectorXd zv = best_x.segment(v * m, m);
          int best_j = 0;
          double best_d = std::numeric_limits<double>::infinity();
          for (int j = 0; j < n; ++j) {
            double d2 = (h.problem.anchors->coords.row(j).transpose() - zv).squaredNorm();
            if (d2 < best_d) {
              best_d = d2;
              best_j = j;
            }
          }
          next[static_cast<std::size_t>(v)] = best_j;
          displacement2 += best_d;
        }
        rec.rounding_displacement = std::sqrt(displacement2);
      } catch (const Error&) {
        rec.fit_fallback = true;
      }
    } else {
      rec.fit_fallback = true;
    }

    if (rec.fit_fallback) {
      Rng rng(derive_seed(cfg.seed, "fallback", iter));
      next = uniform_design(e, n, rng);
    }

    h.evaluate(next);
    h.result.iterations.push_back(std::move(rec));
  }
  h.finish();
  return h.result;
}

RunResult run_baseline(const BaselineConfig& cfg) {
  if (cfg.method == "rs") return run_random_search(cfg.run);
  if (cfg.method == "ga") return run_ga(cfg.run);
  if (cfg.method == "crbo") return run_crbo(cfg.run);
  throw ValidationError("unknown baseline method '" + cfg.method + "'");
}

}  // namespace cobalt
