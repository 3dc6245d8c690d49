#pragma once

#include <Eigen/Dense>
#include <functional>

#include "cobalt/rng.hpp"

namespace cobalt {

/// Log-density with gradient: fills `grad` and returns log p(x). Must return
/// -inf (never throw) for numerically invalid points.
using LogDensityGradient = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct NutsConfig {
  int warmup = 256;
  int samples = 256;   // post-warmup iterations (before thinning)
  int thin = 2;
  int max_depth = 8;
  double target_accept = 0.8;
};

struct NutsResult {
  Eigen::MatrixXd draws;  // retained draws, one per row
  double mean_accept = 0.0;
  int divergences = 0;
  double step_size = 0.0;
};

/// No-U-Turn sampler with dual-averaging step-size adaptation and a unit
/// metric. Divergent trajectories (energy error > 1000) are counted and
/// rejected.
NutsResult run_nuts(const LogDensityGradient& target, const Eigen::VectorXd& init,
                    const NutsConfig& cfg, Rng& rng);

}  // namespace cobalt
