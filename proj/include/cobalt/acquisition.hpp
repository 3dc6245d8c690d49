#pragma once

#include <Eigen/Dense>
#include <set>
#include <vector>

#include "cobalt/design.hpp"
#include "cobalt/gp.hpp"
#include "cobalt/manifold.hpp"
#include "cobalt/rng.hpp"

namespace cobalt {

/// Chebyshev box of half-width length/2 around the incumbent's latent
/// coordinates, intersected with the tensor grid by admissible_anchors.
struct TrustRegion {
  Design center;
  Eigen::VectorXd center_latent;
  double length = 0.0;
  int success_count = 0;
  int fail_count = 0;
  double l_min = 0.0;
  double l_max = 0.0;
  double l_init = 0.0;
  int success_tolerance = 3;
  int fail_tolerance = 5;
};

struct TrustRegionConstants {
  double init_frac = 0.8;        // L_init = init_frac * latent span
  double min_spacing_mult = 2.0; // L_min = mult * median nearest-anchor spacing
  double max_frac = 2.0;         // L_max = max_frac * latent span
  int success_tolerance = 3;
  int fail_tolerance = 5;
};

/// Latent span (max per-dimension coordinate range) and median
/// nearest-anchor spacing, from which the region bounds derive.
TrustRegion make_trust_region(const TensorGrid& grid, const Design& center,
                              const TrustRegionConstants& constants);

/// Moves the box onto a new incumbent, keeping length and counters.
void recenter(TrustRegion& tr, const TensorGrid& grid, const Design& incumbent);

/// TuRBO-style counter update: doubling after success_tolerance consecutive
/// improvements, halving after fail_tolerance consecutive failures. A halving
/// that would drop below l_min first clamps to l_min; halving at the floor
/// restarts the region at l_init.
TrustRegion update_trust_region(TrustRegion tr, bool improved);

/// Additive lower confidence bound: sum over edges of (mean - kappa*sd),
/// plus the constant-mean offset added once.
double lcb(const Prediction& pred, double kappa);

/// Per-variable anchor indices inside the box. Always contains the
/// incumbent's own index for each variable.
std::vector<std::vector<int>> admissible_anchors(const TensorGrid& grid, const TrustRegion& tr);

struct EvoConfig {
  int population = 50;
  int generations = 100;
  double p_mut = 0.3;
};

struct AcquisitionResult {
  Design design;
  double lcb_value = 0.0;
  bool stalled = false;          // trust region holds only the incumbent
  bool previously_seen = false;  // design was already evaluated
};

/// Discrete evolutionary minimizer of the LCB over the admissible tensor
/// grid: uniform crossover, anchor-graph neighbor mutation, geodesic drift
/// toward the population best, tournament-3 selection, elitism 1. Returns a
/// never-evaluated design whenever one is found (or, for small regions,
/// whenever one exists); otherwise the best admissible design.
AcquisitionResult maximize_acquisition(const SurrogatePosterior& post, const TrustRegion& tr,
                                       const TensorGrid& grid, const NeighborGraph& anchor_graph,
                                       const PathTable& anchor_paths, double kappa,
                                       const EvoConfig& evo, const std::set<Design>& evaluated,
                                       Rng& rng);

}  // namespace cobalt
