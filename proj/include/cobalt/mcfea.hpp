#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cobalt/catalog.hpp"
#include "cobalt/design.hpp"
#include "cobalt/fea.hpp"
#include "cobalt/rng.hpp"
#include "cobalt/structure.hpp"

namespace cobalt {

/// One draw of the aleatoric parameters: Young's modulus, per-load scale
/// factors and nodal coordinate offsets.
struct Realization {
  double e_modulus = 0.0;
  std::vector<double> load_scales;
  Eigen::MatrixXd node_offsets;
  int e_truncation_retries = 0;  // times the E draw hit the lower truncation
};

/// Robust objective/constraint sample for one design: y_obs = mean + gamma*sd
/// of the Monte Carlo strain energies, with a bootstrap estimate of its
/// sampling variance. Constraint order: mass, buckling-y, buckling-z.
struct Observation {
  Design design;
  double y_obs = 0.0;
  double noise_var = 0.0;
  double mean_j = 0.0;
  double std_j = 0.0;
  std::vector<double> robust_constraints;
  bool feasible = false;
  int n_mc = 0;
  std::uint64_t seed = 0;
  bool failed = false;  // oracle failure (solve error); y_obs is +inf

  double total_violation() const;
};

struct OracleConfig {
  UncertaintySpec uncertainty;
  int n_mc = 500;
  double gamma = 1.0;
  std::vector<double> beta{1.0, 1.0, 1.0};  // per-constraint robustness weights
  double mass_budget = 240.0;               // kg
  int bootstrap_resamples = 200;
  FeaOptions fea;
  int threads = 1;
};

/// Draws E (normal, truncated below at 0.5 E0), one scale factor per nominal
/// load, and i.i.d. nodal offsets with sd geo_sigma_frac * span.
Realization sample_realization(const StructureModel& s, const UncertaintySpec& spec, Rng& rng);

/// The stochastic oracle: n_mc independent FEA solves under sampled
/// uncertainty. Per-sample randomness comes from substreams of `seed`, so
/// results are independent of scheduling. Deterministic given
/// (design, spec, n_mc, seed).
Observation evaluate_robust(const StructureModel& s, const Catalog& catalog, const Design& design,
                            const OracleConfig& cfg, std::uint64_t seed);

}  // namespace cobalt
