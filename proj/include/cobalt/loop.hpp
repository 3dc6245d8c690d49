#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cobalt/acquisition.hpp"
#include "cobalt/catalog.hpp"
#include "cobalt/gp.hpp"
#include "cobalt/manifold.hpp"
#include "cobalt/mcfea.hpp"
#include "cobalt/spanning_tree.hpp"
#include "cobalt/structure.hpp"

namespace cobalt {

struct GaConfig {
  int population = 20;
  double crossover_rate = 0.9;
  double mutation_rate = -1.0;  // negative: default to 1/e
  double penalty_weight = 1e6;
};

struct CrboConfig {
  int restarts = 32;
  int steps = 200;
};

/// Everything needed to reproduce a run bit-identically (together with the
/// master seed): problem files, embedding, budget, oracle, acquisition and
/// surrogate constants.
struct RunConfig {
  std::string structure_path;
  std::string catalog_path;

  std::string embed_method = "isomap";  // isomap | pca
  int embed_k = 6;
  int embed_m = 2;
  int graph_k = 6;  // latent anchor-graph neighbors

  int budget = 60;
  int init_count = 0;  // 0: defaults to 2*e + 2
  std::uint64_t seed = 0;
  int threads = 1;

  OracleConfig oracle;
  double kappa = 2.0;
  TrustRegionConstants tr;
  EvoConfig evo;
  McmcConfig mcmc;

  bool rs_dedupe = false;
  GaConfig ga;
  CrboConfig crbo;
};

struct IterationRecord {
  int eval_index = 0;  // index of the observation this iteration produced
  TreeDecomposition tree;
  double tr_length = 0.0;
  double acq_value = 0.0;
  bool stalled = false;
  bool fit_fallback = false;
  double max_rhat = 0.0;
  double mean_accept = 0.0;
  int divergences = 0;
  double rounding_displacement = 0.0;  // CR-BO decoding-failure diagnostic
};

struct RunResult {
  std::string method = "cobalt";
  std::vector<Observation> observations;       // evaluation order
  std::vector<int> incumbent_trajectory;       // incumbent index after each eval
  std::vector<IterationRecord> iterations;     // surrogate-driven evaluations
  std::vector<Eigen::VectorXd> latent_visits;  // latent coords per evaluation
  int best_index = -1;
  bool has_feasible = false;
  std::uint64_t catalog_hash = 0;
  std::uint64_t anchors_hash = 0;
  double residual_stress = 0.0;
  int embedding_e = 0;
};

/// Incumbent rule: best feasible y_obs (ties -> earliest); with no feasible
/// design, the least total constraint violation. Returns an index into obs.
int select_incumbent_index(const std::vector<Observation>& obs);
Design select_incumbent(const std::vector<Observation>& obs);

/// Shared problem context: loaded structure/catalog plus locked anchors.
struct Problem {
  StructureModel structure;
  Catalog catalog;
  std::shared_ptr<const AnchorSet> anchors;
  TensorGrid grid;
  NeighborGraph anchor_graph;
  PathTable anchor_paths;
};
Problem load_problem(const RunConfig& cfg);

/// The full anchored Bayesian loop: embed once, evaluate initial designs,
/// then per iteration sample a tree, fit the additive surrogate, maximize
/// the trust-region LCB over the anchored grid and call the oracle.
RunResult run_cobalt(const RunConfig& cfg);

}  // namespace cobalt
