#include "cobalt/nuts.hpp"

#include <cmath>
#include <limits>

#include "cobalt/errors.hpp"

namespace cobalt {

namespace {

constexpr double kDivergenceThreshold = 1000.0;

struct State {
  Eigen::VectorXd theta;
  Eigen::VectorXd momentum;
  Eigen::VectorXd grad;
  double logp = 0.0;

  double joint() const { return logp - 0.5 * momentum.squaredNorm(); }
};

struct Walker {
  const LogDensityGradient* target;
  Rng* rng;
  double step = 1.0;
  double log_u = 0.0;
  int divergences = 0;
  double accept_sum = 0.0;
  int accept_count = 0;
  double joint0 = 0.0;

  void leapfrog(State& s, double direction) const {
    const double eps = direction * step;
    s.momentum += 0.5 * eps * s.grad;
    s.theta += eps * s.momentum;
    s.logp = (*target)(s.theta, s.grad);
    s.momentum += 0.5 * eps * s.grad;
  }
};

struct Subtree {
  State minus, plus;   // trajectory endpoints
  Eigen::VectorXd proposal;
  int n_valid = 0;     // states below the slice
  bool keep_going = false;
};

bool no_u_turn(const Subtree& t) {
  Eigen::VectorXd span = t.plus.theta - t.minus.theta;
  return span.dot(t.minus.momentum) >= 0.0 && span.dot(t.plus.momentum) >= 0.0;
}

Subtree build_tree(Walker& w, const State& from, double direction, int depth) {
  if (depth == 0) {
    State s = from;
    w.leapfrog(s, direction);
    double joint = std::isfinite(s.logp) ? s.joint() : -std::numeric_limits<double>::infinity();
    Subtree leaf;
    leaf.minus = s;
    leaf.plus = s;
    leaf.proposal = s.theta;
    leaf.n_valid = (w.log_u <= joint) ? 1 : 0;
    bool divergent = !(joint - w.log_u > -kDivergenceThreshold);
    if (divergent) ++w.divergences;
    leaf.keep_going = !divergent;
    w.accept_sum += std::min(1.0, std::exp(joint - w.joint0));
    w.accept_count += 1;
    return leaf;
  }

  Subtree first = build_tree(w, from, direction, depth - 1);
  if (!first.keep_going) return first;

  const State& frontier = (direction > 0) ? first.plus : first.minus;
  Subtree second = build_tree(w, frontier, direction, depth - 1);

  Subtree merged;
  merged.minus = (direction > 0) ? first.minus : second.minus;
  merged.plus = (direction > 0) ? second.plus : first.plus;
  merged.n_valid = first.n_valid + second.n_valid;
  merged.proposal = first.proposal;
  if (merged.n_valid > 0 &&
      w.rng->uniform() < static_cast<double>(second.n_valid) / merged.n_valid) {
    merged.proposal = second.proposal;
  }
  merged.keep_going = second.keep_going && no_u_turn(merged);
  return merged;
}

double find_initial_step(const LogDensityGradient& target, const State& init, Rng& rng) {
  Walker w{&target, &rng, 1.0, 0.0, 0, 0.0, 0, 0.0};
  State s = init;
  for (Eigen::Index i = 0; i < s.momentum.size(); ++i) s.momentum(i) = rng.normal();
  double joint0 = s.joint();
  State probe = s;
  w.leapfrog(probe, 1.0);
  double joint1 = std::isfinite(probe.logp) ? probe.joint()
                                            : -std::numeric_limits<double>::infinity();
  double direction = (joint1 - joint0 > std::log(0.5)) ? 1.0 : -1.0;
  for (int iter = 0; iter < 50; ++iter) {
    w.step = std::pow(2.0, direction) * w.step;
    probe = s;
    w.leapfrog(probe, 1.0);
    joint1 = std::isfinite(probe.logp) ? probe.joint()
                                       : -std::numeric_limits<double>::infinity();
    if (direction * (joint1 - joint0) <= direction * std::log(0.5)) break;
  }
  return w.step;
}

}  // namespace

NutsResult run_nuts(const LogDensityGradient& target, const Eigen::VectorXd& init,
                    const NutsConfig& cfg, Rng& rng) {
  const auto dim = init.size();
  State current;
  current.theta = init;
  current.momentum = Eigen::VectorXd::Zero(dim);
  current.grad = Eigen::VectorXd::Zero(dim);
  current.logp = target(current.theta, current.grad);
  if (!std::isfinite(current.logp))
    throw Error("NUTS initialization point has non-finite log density");

  Walker w{&target, &rng, find_initial_step(target, current, rng), 0.0, 0, 0.0, 0, 0.0};

  // Dual averaging (target_accept), Hoffman & Gelman constants.
  const double mu = std::log(10.0 * w.step);
  double log_step_bar = 0.0, h_bar = 0.0;
  const double gamma = 0.05, t0 = 10.0, kappa = 0.75;

  const int total_iters = cfg.warmup + cfg.samples;
  const int retained = cfg.samples / std::max(1, cfg.thin);
  NutsResult result;
  result.draws.resize(retained, dim);
  int stored = 0;
  double accept_total = 0.0;
  int accept_iters = 0;

  for (int iter = 0; iter < total_iters; ++iter) {
    for (Eigen::Index i = 0; i < dim; ++i) current.momentum(i) = rng.normal();
    w.joint0 = current.joint();
    w.log_u = w.joint0 + std::log(std::max(rng.uniform(), 1e-300));
    w.accept_sum = 0.0;
    w.accept_count = 0;

    Subtree traj;
    traj.minus = current;
    traj.plus = current;
    traj.proposal = current.theta;
    traj.n_valid = 1;
    traj.keep_going = true;

    for (int depth = 0; depth < cfg.max_depth && traj.keep_going; ++depth) {
      double direction = (rng.uniform() < 0.5) ? -1.0 : 1.0;
      Subtree fresh =
          build_tree(w, (direction > 0) ? traj.plus : traj.minus, direction, depth);
      if (direction > 0)
        traj.plus = fresh.plus;
      else
        traj.minus = fresh.minus;
      if (fresh.keep_going && fresh.n_valid > 0 &&
          rng.uniform() < static_cast<double>(fresh.n_valid) / traj.n_valid) {
        traj.proposal = fresh.proposal;
      }
      traj.n_valid += fresh.n_valid;
      traj.keep_going = fresh.keep_going && no_u_turn(traj);
    }

    Eigen::VectorXd grad(dim);
    double logp = target(traj.proposal, grad);
    if (std::isfinite(logp)) {
      current.theta = traj.proposal;
      current.grad = grad;
      current.logp = logp;
    }

    double accept_stat = (w.accept_count > 0) ? w.accept_sum / w.accept_count : 0.0;
    if (iter < cfg.warmup) {
      double m = iter + 1;
      h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (cfg.target_accept - accept_stat) / (m + t0);
      double log_step = mu - std::sqrt(m) / gamma * h_bar;
      double weight = std::pow(m, -kappa);
      log_step_bar = weight * log_step + (1.0 - weight) * log_step_bar;
      w.step = std::exp(log_step);
      if (iter == cfg.warmup - 1) w.step = std::exp(log_step_bar);
    } else {
      accept_total += accept_stat;
      ++accept_iters;
      int post = iter - cfg.warmup;
      if ((post + 1) % std::max(1, cfg.thin) == 0 && stored < retained) {
        result.draws.row(stored++) = current.theta;
      }
    }
  }

  result.mean_accept = accept_iters > 0 ? accept_total / accept_iters : 0.0;
  result.divergences = w.divergences;
  result.step_size = w.step;
  result.draws.conservativeResize(stored, dim);
  return result;
}

}  // namespace cobalt
