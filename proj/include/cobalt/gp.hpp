#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cobalt/spanning_tree.hpp"

namespace cobalt {

/// One additive component of the tree kernel: the edge (u,v) acting on the
/// concatenated latent blocks of variables u and v. A one-variable problem
/// degenerates to a single univariate component, encoded as u == v.
struct KernelComponent {
  int u = 0;
  int v = 0;

  bool univariate() const { return u == v; }
};

std::vector<KernelComponent> components_of(const TreeDecomposition& tree);

/// Hyperparameters of one component kernel: signal variance and ARD inverse
/// lengthscales theta_d (one per active latent coordinate).
struct EdgeHyper {
  double signal_var = 1.0;
  Eigen::VectorXd inv_lengthscales;
};

struct Hyperparameters {
  std::vector<EdgeHyper> edges;  // one per kernel component
  double tau = 0.1;              // global horseshoe scale
  double noise_floor = 1e-3;     // residual noise variance sigma^2_res
  double mean_const = 0.0;       // constant mean (standardized output units)
};

/// Matern-5/2 correlation at scaled distance r.
double matern52(double r);

/// sigma_f^2 * matern52(r) with r^2 = sum_d theta_d^2 (za_d - zb_d)^2 over
/// the component subspace.
double edge_kernel(const EdgeHyper& h, const Eigen::VectorXd& za, const Eigen::VectorXd& zb);

/// Entrywise sum of component kernels over the rows of z (t x m*e).
Eigen::MatrixXd additive_kernel_matrix(const TreeDecomposition& tree, int m,
                                       const Hyperparameters& h, const Eigen::MatrixXd& z);

/// Training data: latent inputs, targets and per-point observation-noise
/// variances (heteroscedastic, supplied by the oracle).
struct GpData {
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  Eigen::VectorXd noise_var;
};

struct McmcConfig {
  int warmup = 256;
  int draws = 128;  // retained draws after thinning
  int thin = 2;
  int chains = 1;
  int max_depth = 8;
  double target_accept = 0.8;
  double tau0 = 0.1;               // scale of the half-Cauchy hyperprior on tau
  double noise_floor_scale = 0.1;  // half-normal prior scale on sigma^2_res
  std::uint64_t seed = 0;
};

struct FitDiagnostics {
  Eigen::VectorXd rhat;  // split-Rhat per unconstrained parameter
  double mean_accept = 0.0;
  int divergences = 0;
  int rejitters = 0;
  double step_size = 0.0;
};

/// Moment-matched predictive distribution across MCMC draws, in raw output
/// units. Per-component means sum to the total mean minus `mean_offset`.
struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  double mean_offset = 0.0;
  Eigen::VectorXd edge_means;
  Eigen::VectorXd edge_sds;
};

/// Fitted additive SAAS-GP: MCMC hyperparameter draws with cached Cholesky
/// factorizations of (K + noise diag) on standardized data. Immutable after
/// fit; predict is read-only and thread-safe.
class SurrogatePosterior {
 public:
  /// Fully Bayesian fit under half-Cauchy (horseshoe) priors on the inverse
  /// lengthscales via NUTS on log-transformed parameters. Throws after 10
  /// failed re-jitters of a non-finite initialization.
  static SurrogatePosterior fit(GpData data, TreeDecomposition tree, int m,
                                const McmcConfig& cfg);

  /// Posterior with externally fixed hyperparameter draws (no MCMC).
  static SurrogatePosterior from_draws(GpData data, TreeDecomposition tree, int m,
                                       std::vector<Hyperparameters> draws);

  Prediction predict(const Eigen::VectorXd& z) const;

  /// Moment-matched (mean, sd) of one additive component at the given raw
  /// component-subspace coordinates. This is the unit the acquisition search
  /// caches per anchor pair.
  struct ComponentMoments {
    double mean = 0.0;
    double sd = 0.0;
  };
  ComponentMoments component_moments(int component, const Eigen::VectorXd& z_comp) const;

  /// Constant-mean contribution in raw units, averaged over draws.
  double mean_offset() const;

  const std::vector<Hyperparameters>& draws() const { return draws_; }
  const std::vector<KernelComponent>& components() const { return comps_; }
  const TreeDecomposition& tree() const { return tree_; }
  const FitDiagnostics& diagnostics() const { return diag_; }
  const GpData& data() const { return data_; }
  int latent_dim() const { return m_; }

  /// Max reconstruction error of the cached factorizations against freshly
  /// assembled kernel matrices (invariant check).
  double factorization_residual() const;

  /// Unconstrained-space log posterior and gradient used by the sampler,
  /// exposed for finite-difference verification.
  double log_posterior_gradient(const Eigen::VectorXd& packed, Eigen::VectorXd& grad) const;
  Eigen::VectorXd pack(const Hyperparameters& h) const;
  Hyperparameters unpack(const Eigen::VectorXd& packed) const;

 private:
  SurrogatePosterior() = default;
  void standardize();
  void build_caches();
  std::vector<int> component_columns(int component) const;

  GpData data_;  // raw inputs as supplied
  TreeDecomposition tree_;
  int m_ = 0;
  std::vector<KernelComponent> comps_;
  std::vector<Hyperparameters> draws_;
  FitDiagnostics diag_;
  McmcConfig cfg_;

  Eigen::RowVectorXd z_mean_, z_scale_;
  double y_mean_ = 0.0, y_sd_ = 1.0;
  Eigen::MatrixXd z_std_;
  Eigen::VectorXd y_std_, noise_std_;

  std::vector<Eigen::MatrixXd> chol_;   // lower Cholesky of C per draw
  std::vector<Eigen::VectorXd> alpha_;  // C^{-1} (y_std - mu0) per draw
};

}  // namespace cobalt
