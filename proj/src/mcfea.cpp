#include "cobalt/mcfea.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "cobalt/errors.hpp"

namespace cobalt {

namespace {

double sample_mean(const Eigen::VectorXd& x) { return x.mean(); }

double sample_sd(const Eigen::VectorXd& x) {
  const auto n = x.size();
  if (n < 2) return 0.0;
  double m = x.mean();
  return std::sqrt((x.array() - m).square().sum() / static_cast<double>(n - 1));
}

}  // namespace

double Observation::total_violation() const {
  double v = 0.0;
  for (double g : robust_constraints) v += std::max(0.0, g);
  return v;
}

Realization sample_realization(const StructureModel& s, const UncertaintySpec& spec, Rng& rng) {
  Realization r;
  const double e0 = s.material.e0;
  r.e_modulus = rng.normal(e0, spec.cov_e * e0);
  while (r.e_modulus < 0.5 * e0) {  // truncate nonphysical tail draws
    r.e_modulus = rng.normal(e0, spec.cov_e * e0);
    ++r.e_truncation_retries;
  }
  r.load_scales.resize(s.loads.size());
  for (auto& sc : r.load_scales) sc = rng.normal(1.0, spec.cov_load);
  double sigma = spec.geo_sigma_frac * s.characteristic_span();
  r.node_offsets.resize(s.nodes.rows(), s.nodes.cols());
  for (Eigen::Index i = 0; i < r.node_offsets.rows(); ++i)
    for (Eigen::Index j = 0; j < r.node_offsets.cols(); ++j)
      r.node_offsets(i, j) = rng.normal(0.0, sigma);
  return r;
}

Observation evaluate_robust(const StructureModel& s, const Catalog& catalog, const Design& design,
                            const OracleConfig& cfg, std::uint64_t seed) {
  if (cfg.n_mc < 2)
    throw ValidationError("n_mc must be at least 2, got " + std::to_string(cfg.n_mc));
  validate_assignment(s, catalog, design);
  if (cfg.beta.size() < 3) throw ValidationError("beta must provide three constraint weights");

  const int n = cfg.n_mc;
  Eigen::VectorXd energy(n), max_margin_y(n), max_margin_z(n);
  double mass = 0.0;

  auto run_sample = [&](int i) {
    Rng rng(derive_seed(seed, "mc", static_cast<std::uint64_t>(i)));
    Realization real = sample_realization(s, cfg.uncertainty, rng);
    std::vector<NodalLoad> loads = s.loads;
    for (std::size_t l = 0; l < loads.size(); ++l) loads[l].force *= real.load_scales[l];
    FeaResult fr =
        assemble_and_solve(s, catalog, design, real.e_modulus, real.node_offsets, loads, cfg.fea);
    energy(i) = fr.strain_energy;
    max_margin_y(i) = fr.buckling_margin_y.maxCoeff();
    max_margin_z(i) = fr.buckling_margin_z.maxCoeff();
    if (i == 0) mass = fr.mass;
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) run_sample(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < n; i += threads) run_sample(i);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  Observation obs;
  obs.design = design;
  obs.n_mc = n;
  obs.seed = seed;
  obs.mean_j = sample_mean(energy);
  obs.std_j = sample_sd(energy);
  obs.y_obs = obs.mean_j + cfg.gamma * obs.std_j;

  // Bootstrap variance of the mean + gamma*sd statistic.
  {
    const int b_total = std::max(1, cfg.bootstrap_resamples);
    Rng rb(derive_seed(seed, "bootstrap"));
    Eigen::VectorXd stats(b_total), resample(n);
    for (int b = 0; b < b_total; ++b) {
      for (int i = 0; i < n; ++i)
        resample(i) = energy(static_cast<Eigen::Index>(rb.uniform_index(static_cast<std::uint64_t>(n))));
      stats(b) = sample_mean(resample) + cfg.gamma * sample_sd(resample);
    }
    double m = stats.mean();
    obs.noise_var = (stats.array() - m).square().sum() / static_cast<double>(b_total);
  }

  // Mass is deterministic; buckling constraints aggregate the per-sample
  // maxima as mean + beta * sd.
  obs.robust_constraints = {
      mass - cfg.mass_budget,
      sample_mean(max_margin_y) + cfg.beta[1] * sample_sd(max_margin_y),
      sample_mean(max_margin_z) + cfg.beta[2] * sample_sd(max_margin_z),
  };
  obs.feasible = std::all_of(obs.robust_constraints.begin(), obs.robust_constraints.end(),
                             [](double g) { return g <= 0.0; });
  return obs;
}

}  // namespace cobalt
