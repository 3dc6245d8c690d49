#pragma once

#include <string>

#include "cobalt/loop.hpp"

namespace cobalt {

/// Comparison methods sharing the COBALT oracle and budget. The method tag
/// selects random search, a categorical genetic algorithm, or
/// continuous-relaxation BO with nearest-anchor rounding.
struct BaselineConfig {
  std::string method = "rs";  // rs | ga | crbo
  RunConfig run;
};

/// T uniform designs over the tensor grid. With `rs_dedupe` set, repeats are
/// resampled while unvisited designs remain.
RunResult run_random_search(const RunConfig& cfg);

/// Generational GA on the categorical index encoding: tournament-3,
/// uniform crossover, per-gene uniform-reset mutation, elitism 1. Fitness is
/// y_obs plus a large penalty on constraint violation. Stops at exactly
/// `budget` oracle calls.
RunResult run_ga(const RunConfig& cfg);

/// Continuous-relaxation BO: the same additive surrogate, with the LCB
/// minimized over the continuous bounding box of the grid by multi-start
/// coordinate descent, then rounded per variable to the nearest anchor. The
/// rounding displacement is logged per iteration as the decoding-failure
/// diagnostic.
RunResult run_crbo(const RunConfig& cfg);

RunResult run_baseline(const BaselineConfig& cfg);

}  // namespace cobalt
