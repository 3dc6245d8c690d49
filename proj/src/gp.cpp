#include "cobalt/gp.hpp"

#include <cmath>
#include <limits>

#include "cobalt/errors.hpp"
#include "cobalt/nuts.hpp"

namespace cobalt {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kLogSqrtTwoPi = 0.91893853320467274178032973640562;
constexpr double kParamBound = 40.0;  // |log parameter| beyond this is rejected

double half_cauchy_log(double x, double scale) {
  // density 2/(pi*scale*(1+(x/scale)^2)) for x >= 0
  double q = x / scale;
  return std::log(2.0 / M_PI) - std::log(scale) - std::log1p(q * q);
}

}  // namespace

std::vector<KernelComponent> components_of(const TreeDecomposition& tree) {
  std::vector<KernelComponent> comps;
  if (tree.e == 1) {
    comps.push_back({0, 0});
    return comps;
  }
  comps.reserve(tree.edges.size());
  for (const auto& [u, v] : tree.edges) comps.push_back({u, v});
  return comps;
}

double matern52(double r) {
  double a = kSqrt5 * r;
  return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

double edge_kernel(const EdgeHyper& h, const Eigen::VectorXd& za, const Eigen::VectorXd& zb) {
  if (za.size() != zb.size() || za.size() != h.inv_lengthscales.size())
    throw ValidationError("edge kernel dimension mismatch");
  double r2 = (h.inv_lengthscales.array() * (za - zb).array()).square().sum();
  return h.signal_var * matern52(std::sqrt(r2));
}

Eigen::MatrixXd additive_kernel_matrix(const TreeDecomposition& tree, int m,
                                       const Hyperparameters& h, const Eigen::MatrixXd& z) {
  auto comps = components_of(tree);
  if (z.cols() != static_cast<Eigen::Index>(m) * tree.e)
    throw ValidationError("input rows must have dimension m*e");
  if (h.edges.size() != comps.size())
    throw ValidationError("hyperparameter count does not match tree components");

  const auto t = z.rows();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(t, t);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const auto& comp = comps[c];
    const int dim = comp.univariate() ? m : 2 * m;
    Eigen::MatrixXd block(t, dim);
    block.leftCols(m) = z.middleCols(comp.u * m, m);
    if (!comp.univariate()) block.rightCols(m) = z.middleCols(comp.v * m, m);
    for (Eigen::Index i = 0; i < t; ++i) {
      for (Eigen::Index j = i; j < t; ++j) {
        double v = edge_kernel(h.edges[c], block.row(i), block.row(j));
        k(i, j) += v;
        if (j != i) k(j, i) += v;
      }
    }
  }
  return k;
}

std::vector<int> SurrogatePosterior::component_columns(int component) const {
  const auto& comp = comps_[static_cast<std::size_t>(component)];
  std::vector<int> cols;
  for (int d = 0; d < m_; ++d) cols.push_back(comp.u * m_ + d);
  if (!comp.univariate()) {
    for (int d = 0; d < m_; ++d) cols.push_back(comp.v * m_ + d);
  }
  return cols;
}

Eigen::VectorXd SurrogatePosterior::pack(const Hyperparameters& h) const {
  std::vector<double> out;
  for (const auto& e : h.edges) {
    out.push_back(std::log(e.signal_var));
    for (Eigen::Index d = 0; d < e.inv_lengthscales.size(); ++d)
      out.push_back(std::log(e.inv_lengthscales(d)));
  }
  out.push_back(std::log(h.tau));
  out.push_back(std::log(h.noise_floor));
  out.push_back(h.mean_const);
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Hyperparameters SurrogatePosterior::unpack(const Eigen::VectorXd& packed) const {
  Hyperparameters h;
  Eigen::Index at = 0;
  for (std::size_t c = 0; c < comps_.size(); ++c) {
    EdgeHyper e;
    e.signal_var = std::exp(packed(at++));
    const int dim = comps_[c].univariate() ? m_ : 2 * m_;
    e.inv_lengthscales.resize(dim);
    for (int d = 0; d < dim; ++d) e.inv_lengthscales(d) = std::exp(packed(at++));
    h.edges.push_back(std::move(e));
  }
  h.tau = std::exp(packed(at++));
  h.noise_floor = std::exp(packed(at++));
  h.mean_const = packed(at++);
  return h;
}

void SurrogatePosterior::standardize() {
  const auto t = data_.z.rows();
  z_mean_ = data_.z.colwise().mean();
  z_scale_.resize(data_.z.cols());
  for (Eigen::Index j = 0; j < data_.z.cols(); ++j) {
    double sd = std::sqrt((data_.z.col(j).array() - z_mean_(j)).square().sum() /
                          std::max<Eigen::Index>(1, t - 1));
    z_scale_(j) = sd > 1e-12 ? sd : 1.0;
  }
  z_std_ = (data_.z.rowwise() - z_mean_).array().rowwise() / z_scale_.array();

  y_mean_ = data_.y.mean();
  double sd = std::sqrt((data_.y.array() - y_mean_).square().sum() /
                        std::max<Eigen::Index>(1, t - 1));
  y_sd_ = sd > 1e-12 ? sd : 1.0;
  y_std_ = (data_.y.array() - y_mean_) / y_sd_;
  noise_std_ = data_.noise_var / (y_sd_ * y_sd_);
}

double SurrogatePosterior::log_posterior_gradient(const Eigen::VectorXd& packed,
                                                  Eigen::VectorXd& grad) const {
  const auto t = z_std_.rows();
  const auto p = packed.size();
  grad = Eigen::VectorXd::Zero(p);
  if (packed.cwiseAbs().maxCoeff() > kParamBound)
    return -std::numeric_limits<double>::infinity();

  Hyperparameters h = unpack(packed);

  // Assemble C = sum_c K_c + diag(noise + floor), keeping per-component
  // kernels and radial derivative factors for the gradient.
  std::vector<Eigen::MatrixXd> k_comp(comps_.size());
  std::vector<Eigen::MatrixXd> dk_dr2(comps_.size());
  std::vector<Eigen::MatrixXd> blocks(comps_.size());
  Eigen::MatrixXd c_mat = Eigen::MatrixXd::Zero(t, t);
  for (std::size_t c = 0; c < comps_.size(); ++c) {
    auto cols = component_columns(static_cast<int>(c));
    Eigen::MatrixXd block(t, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) block.col(static_cast<Eigen::Index>(j)) = z_std_.col(cols[j]);
    blocks[c] = block;
    const auto& theta = h.edges[c].inv_lengthscales;
    Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(t, t);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      Eigen::VectorXd col = block.col(static_cast<Eigen::Index>(j));
      double th2 = theta(static_cast<Eigen::Index>(j)) * theta(static_cast<Eigen::Index>(j));
      r2.noalias() +=
          th2 * (col.replicate(1, t) - col.transpose().replicate(t, 1)).array().square().matrix();
    }
    Eigen::ArrayXXd r = r2.array().max(0.0).sqrt();
    Eigen::ArrayXXd e = (-kSqrt5 * r).exp();
    double sv = h.edges[c].signal_var;
    k_comp[c] = (sv * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2.array()) * e).matrix();
    dk_dr2[c] = (-(5.0 / 6.0) * sv * (1.0 + kSqrt5 * r) * e).matrix();
    c_mat += k_comp[c];
  }
  c_mat.diagonal() += noise_std_;
  c_mat.diagonal().array() += h.noise_floor;

  Eigen::LLT<Eigen::MatrixXd> llt(c_mat);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();

  Eigen::VectorXd resid = y_std_.array() - h.mean_const;
  Eigen::VectorXd alpha = llt.solve(resid);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < t; ++i) log_det += std::log(llt.matrixL()(i, i));
  double lp = -0.5 * resid.dot(alpha) - log_det - static_cast<double>(t) * kLogSqrtTwoPi;

  Eigen::MatrixXd c_inv = llt.solve(Eigen::MatrixXd::Identity(t, t));

  // Priors (with log-transform Jacobians) and their gradients.
  Eigen::Index at = 0;
  double d_log_tau = 0.0;
  for (std::size_t c = 0; c < comps_.size(); ++c) {
    double s = packed(at);  // log signal variance ~ N(0,1)
    lp += -0.5 * s * s;
    // dC/d log sigma_f^2 = K_c
    grad(at) = 0.5 * alpha.dot(k_comp[c] * alpha) - 0.5 * c_inv.cwiseProduct(k_comp[c]).sum() - s;
    ++at;
    const auto& theta = h.edges[c].inv_lengthscales;
    for (Eigen::Index d = 0; d < theta.size(); ++d, ++at) {
      double th = theta(d);
      lp += half_cauchy_log(th, h.tau) + std::log(th);
      Eigen::VectorXd col = blocks[c].col(d);
      Eigen::MatrixXd sq =
          (col.replicate(1, t) - col.transpose().replicate(t, 1)).array().square().matrix();
      Eigen::MatrixXd dk = dk_dr2[c].cwiseProduct(sq) * (2.0 * th * th);
      grad(at) = 0.5 * alpha.dot(dk * alpha) - 0.5 * c_inv.cwiseProduct(dk).sum();
      grad(at) += -2.0 * th * th / (h.tau * h.tau + th * th) + 1.0;  // prior + Jacobian
      d_log_tau += -1.0 + 2.0 * th * th / (h.tau * h.tau + th * th);
    }
  }
  // tau ~ HC(tau0)
  lp += half_cauchy_log(h.tau, cfg_.tau0) + std::log(h.tau);
  grad(at) = d_log_tau - 2.0 * h.tau * h.tau / (cfg_.tau0 * cfg_.tau0 + h.tau * h.tau) + 1.0;
  ++at;
  // sigma^2_res ~ half-normal(scale)
  double scale = cfg_.noise_floor_scale;
  lp += -0.5 * h.noise_floor * h.noise_floor / (scale * scale) + std::log(h.noise_floor);
  grad(at) = 0.5 * h.noise_floor * alpha.squaredNorm() - 0.5 * h.noise_floor * c_inv.trace() -
             h.noise_floor * h.noise_floor / (scale * scale) + 1.0;
  ++at;
  // mu0 ~ N(0,1)
  lp += -0.5 * h.mean_const * h.mean_const;
  grad(at) = alpha.sum() - h.mean_const;

  return lp;
}

void SurrogatePosterior::build_caches() {
  chol_.clear();
  alpha_.clear();
  chol_.reserve(draws_.size());
  alpha_.reserve(draws_.size());
  for (const auto& h : draws_) {
    Eigen::MatrixXd c_mat = additive_kernel_matrix(tree_, m_, h, z_std_);
    c_mat.diagonal() += noise_std_;
    c_mat.diagonal().array() += h.noise_floor;
    Eigen::LLT<Eigen::MatrixXd> llt(c_mat);
    if (llt.info() != Eigen::Success)
      throw Error("posterior cache factorization failed for a hyperparameter draw");
    Eigen::VectorXd resid = y_std_.array() - h.mean_const;
    chol_.push_back(llt.matrixL());
    alpha_.push_back(llt.solve(resid));
  }
}

double SurrogatePosterior::factorization_residual() const {
  double worst = 0.0;
  for (std::size_t d = 0; d < draws_.size(); ++d) {
    Eigen::MatrixXd c_mat = additive_kernel_matrix(tree_, m_, draws_[d], z_std_);
    c_mat.diagonal() += noise_std_;
    c_mat.diagonal().array() += draws_[d].noise_floor;
    Eigen::MatrixXd rebuilt = chol_[d] * chol_[d].transpose();
    worst = std::max(worst, (rebuilt - c_mat).cwiseAbs().maxCoeff());
  }
  return worst;
}

SurrogatePosterior SurrogatePosterior::from_draws(GpData data, TreeDecomposition tree, int m,
                                                  std::vector<Hyperparameters> draws) {
  if (draws.empty()) throw ValidationError("posterior needs at least one hyperparameter draw");
  SurrogatePosterior post;
  post.data_ = std::move(data);
  post.tree_ = std::move(tree);
  post.m_ = m;
  post.comps_ = components_of(post.tree_);
  post.draws_ = std::move(draws);
  post.standardize();
  post.build_caches();
  return post;
}

SurrogatePosterior SurrogatePosterior::fit(GpData data, TreeDecomposition tree, int m,
                                           const McmcConfig& cfg) {
  if (data.z.rows() < 2) throw ValidationError("surrogate fit needs at least 2 observations");
  if (data.y.size() != data.z.rows() || data.noise_var.size() != data.z.rows())
    throw ValidationError("targets and noise variances must match input rows");
  if ((data.noise_var.array() < 0.0).any())
    throw ValidationError("noise variances must be nonnegative");

  SurrogatePosterior post;
  post.data_ = std::move(data);
  post.tree_ = std::move(tree);
  post.m_ = m;
  post.cfg_ = cfg;
  post.comps_ = components_of(post.tree_);
  post.standardize();

  // Initial point: unit signal variance, moderate inverse lengthscales at
  // the horseshoe scale, small residual floor.
  Hyperparameters init;
  for (const auto& comp : post.comps_) {
    EdgeHyper e;
    e.signal_var = 1.0;
    e.inv_lengthscales = Eigen::VectorXd::Constant(comp.univariate() ? m : 2 * m, 0.3);
    init.edges.push_back(std::move(e));
  }
  init.tau = cfg.tau0;
  init.noise_floor = 1e-2;
  init.mean_const = 0.0;
  Eigen::VectorXd phi0 = post.pack(init);

  auto target = [&post](const Eigen::VectorXd& phi, Eigen::VectorXd& grad) {
    return post.log_posterior_gradient(phi, grad);
  };

  Rng jitter_rng(derive_seed(cfg.seed, "gp-init"));
  Eigen::VectorXd grad_probe(phi0.size());
  int rejitters = 0;
  while (!std::isfinite(target(phi0, grad_probe))) {
    if (++rejitters > 10)
      throw Error("surrogate fit: non-finite log posterior after 10 re-jitters");
    for (Eigen::Index i = 0; i < phi0.size(); ++i) phi0(i) += 0.1 * jitter_rng.normal();
  }

  NutsConfig nuts_cfg;
  nuts_cfg.warmup = cfg.warmup;
  nuts_cfg.thin = std::max(1, cfg.thin);
  nuts_cfg.max_depth = cfg.max_depth;
  nuts_cfg.target_accept = cfg.target_accept;

  const int chains = std::max(1, cfg.chains);
  const int per_chain = std::max(1, cfg.draws / chains);
  nuts_cfg.samples = per_chain * nuts_cfg.thin;

  std::vector<Eigen::MatrixXd> chain_draws;
  double accept_sum = 0.0;
  int divergences = 0;
  double step_size = 0.0;
  for (int c = 0; c < chains; ++c) {
    Rng rng(derive_seed(cfg.seed, "gp-chain", static_cast<std::uint64_t>(c)));
    NutsResult res = run_nuts(target, phi0, nuts_cfg, rng);
    accept_sum += res.mean_accept;
    divergences += res.divergences;
    step_size = res.step_size;
    chain_draws.push_back(std::move(res.draws));
  }

  // Split-Rhat over the retained draws: each chain is halved, giving
  // 2*chains sequences per parameter.
  const auto p = phi0.size();
  Eigen::VectorXd rhat(p);
  {
    for (Eigen::Index j = 0; j < p; ++j) {
      std::vector<std::pair<double, double>> stats;  // (mean, var) per sequence
      Eigen::Index nseq_len = 0;
      for (const auto& cd : chain_draws) {
        Eigen::Index half = cd.rows() / 2;
        if (half < 2) continue;
        nseq_len = half;
        for (int s = 0; s < 2; ++s) {
          Eigen::VectorXd seq = cd.col(j).segment(s * half, half);
          double mean = seq.mean();
          double var = (seq.array() - mean).square().sum() / static_cast<double>(half - 1);
          stats.emplace_back(mean, var);
        }
      }
      if (stats.size() < 2 || nseq_len < 2) {
        rhat(j) = 1.0;
        continue;
      }
      double grand = 0.0, w = 0.0;
      for (auto& [mn, vr] : stats) {
        grand += mn;
        w += vr;
      }
      grand /= static_cast<double>(stats.size());
      w /= static_cast<double>(stats.size());
      double b = 0.0;
      for (auto& [mn, vr] : stats) b += (mn - grand) * (mn - grand);
      b *= static_cast<double>(nseq_len) / static_cast<double>(stats.size() - 1);
      if (w <= 1e-300) {
        rhat(j) = 1.0;
      } else {
        double var_plus = (static_cast<double>(nseq_len - 1) / nseq_len) * w + b / nseq_len;
        rhat(j) = std::sqrt(var_plus / w);
      }
    }
  }

  for (const auto& cd : chain_draws) {
    for (Eigen::Index r = 0; r < cd.rows(); ++r) post.draws_.push_back(post.unpack(cd.row(r)));
  }
  if (post.draws_.empty()) throw Error("MCMC produced no draws");

  post.diag_.rhat = rhat;
  post.diag_.mean_accept = accept_sum / chains;
  post.diag_.divergences = divergences;
  post.diag_.rejitters = rejitters;
  post.diag_.step_size = step_size;

  post.build_caches();
  return post;
}

SurrogatePosterior::ComponentMoments SurrogatePosterior::component_moments(
    int component, const Eigen::VectorXd& z_comp) const {
  auto cols = component_columns(component);
  if (z_comp.size() != static_cast<Eigen::Index>(cols.size()))
    throw ValidationError("component coordinate dimension mismatch");

  // Standardize with the component's input constants.
  Eigen::VectorXd zc(z_comp.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    zc(static_cast<Eigen::Index>(j)) =
        (z_comp(static_cast<Eigen::Index>(j)) - z_mean_(cols[j])) / z_scale_(cols[j]);

  const auto t = z_std_.rows();
  double mean_acc = 0.0, second_acc = 0.0;
  Eigen::VectorXd kvec(t);
  for (std::size_t d = 0; d < draws_.size(); ++d) {
    const auto& eh = draws_[d].edges[static_cast<std::size_t>(component)];
    for (Eigen::Index i = 0; i < t; ++i) {
      Eigen::VectorXd row(zc.size());
      for (std::size_t j = 0; j < cols.size(); ++j)
        row(static_cast<Eigen::Index>(j)) = z_std_(i, cols[j]);
      kvec(i) = edge_kernel(eh, zc, row);
    }
    double mu = kvec.dot(alpha_[d]) * y_sd_;
    Eigen::VectorXd v = chol_[d].triangularView<Eigen::Lower>().solve(kvec);
    double var = (eh.signal_var - v.squaredNorm()) * y_sd_ * y_sd_;
    mean_acc += mu;
    second_acc += var + mu * mu;
  }
  const double n = static_cast<double>(draws_.size());
  ComponentMoments out;
  out.mean = mean_acc / n;
  out.sd = std::sqrt(std::max(0.0, second_acc / n - out.mean * out.mean));
  return out;
}

double SurrogatePosterior::mean_offset() const {
  double acc = 0.0;
  for (const auto& h : draws_) acc += h.mean_const;
  return y_mean_ + y_sd_ * acc / static_cast<double>(draws_.size());
}

Prediction SurrogatePosterior::predict(const Eigen::VectorXd& z) const {
  if (z.size() != z_std_.cols()) throw ValidationError("prediction input dimension mismatch");
  Eigen::VectorXd zs = ((z.transpose() - z_mean_).array() / z_scale_.array()).transpose();

  const auto t = z_std_.rows();
  const auto nc = static_cast<Eigen::Index>(comps_.size());
  const double ndraws = static_cast<double>(draws_.size());

  Prediction pred;
  pred.edge_means = Eigen::VectorXd::Zero(nc);
  pred.edge_sds = Eigen::VectorXd::Zero(nc);
  Eigen::VectorXd edge_mean_acc = Eigen::VectorXd::Zero(nc);
  Eigen::VectorXd edge_second_acc = Eigen::VectorXd::Zero(nc);
  double mean_acc = 0.0, second_acc = 0.0, offset_acc = 0.0;

  Eigen::MatrixXd kvecs(t, nc);
  for (std::size_t d = 0; d < draws_.size(); ++d) {
    const auto& h = draws_[d];
    double k_self_total = 0.0;
    for (Eigen::Index c = 0; c < nc; ++c) {
      auto cols = component_columns(static_cast<int>(c));
      Eigen::VectorXd zc(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j)
        zc(static_cast<Eigen::Index>(j)) = zs(cols[j]);
      for (Eigen::Index i = 0; i < t; ++i) {
        Eigen::VectorXd row(zc.size());
        for (std::size_t j = 0; j < cols.size(); ++j)
          row(static_cast<Eigen::Index>(j)) = z_std_(i, cols[j]);
        kvecs(i, c) = edge_kernel(h.edges[static_cast<std::size_t>(c)], zc, row);
      }
      k_self_total += h.edges[static_cast<std::size_t>(c)].signal_var;

      double mu_c = kvecs.col(c).dot(alpha_[d]) * y_sd_;
      Eigen::VectorXd v = chol_[d].triangularView<Eigen::Lower>().solve(kvecs.col(c));
      double var_c =
          (h.edges[static_cast<std::size_t>(c)].signal_var - v.squaredNorm()) * y_sd_ * y_sd_;
      edge_mean_acc(c) += mu_c;
      edge_second_acc(c) += var_c + mu_c * mu_c;
    }
    Eigen::VectorXd k_total = kvecs.rowwise().sum();
    double mu = y_mean_ + y_sd_ * (h.mean_const + k_total.dot(alpha_[d]));
    Eigen::VectorXd v = chol_[d].triangularView<Eigen::Lower>().solve(k_total);
    double var = (k_self_total - v.squaredNorm()) * y_sd_ * y_sd_;
    mean_acc += mu;
    second_acc += var + mu * mu;
    offset_acc += y_mean_ + y_sd_ * h.mean_const;
  }

  pred.mean = mean_acc / ndraws;
  pred.variance = second_acc / ndraws - pred.mean * pred.mean;
  pred.mean_offset = offset_acc / ndraws;
  for (Eigen::Index c = 0; c < nc; ++c) {
    pred.edge_means(c) = edge_mean_acc(c) / ndraws;
    double var = edge_second_acc(c) / ndraws - pred.edge_means(c) * pred.edge_means(c);
    pred.edge_sds(c) = std::sqrt(std::max(0.0, var));
  }
  return pred;
}

}  // namespace cobalt
