#include "ramplab/rl/qlearning.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "ramplab/nlp/box_qp.hpp"

namespace ramplab::rl {

double td_error(const Transition& t, const LearnerConfig& cfg) {
  if (!t.valid) throw std::logic_error("td_error: transition carries a degraded evaluation");
  const double g = std::pow(cfg.gamma, cfg.td_discount_exponent);
  return t.cost + g * t.next_value - t.q_value;
}

std::vector<const Transition*> sample_batch(const ReplayBuffer& buffer, const LearnerConfig& cfg,
                                            std::mt19937_64& rng) {
  if (buffer.empty()) throw std::runtime_error("sample_batch: empty replay buffer");
  const int total = buffer.size();
  const int per_episode = buffer.transitions_per_episode();
  const int batch = std::max(1, cfg.batch_episodes * per_episode);

  const int recent_len =
      std::min(total, std::max(1, static_cast<int>(cfg.recent_window_episodes * per_episode)));
  const int old_len = total - recent_len;
  const int recent_start = old_len;

  int n_recent = static_cast<int>(std::floor(cfg.recent_fraction * batch));
  if (old_len == 0) n_recent = batch;
  const int n_old = batch - n_recent;

  std::vector<const Transition*> out;
  out.reserve(batch);
  std::uniform_int_distribution<int> pick_recent(recent_start, total - 1);
  for (int i = 0; i < n_recent; ++i) out.push_back(&buffer.at(pick_recent(rng)));
  if (n_old > 0) {
    std::uniform_int_distribution<int> pick_old(0, old_len - 1);
    for (int i = 0; i < n_old; ++i) out.push_back(&buffer.at(pick_old(rng)));
  }
  return out;
}

UpdateData build_update(const std::vector<const Transition*>& batch, const LearnerConfig& cfg) {
  UpdateData u;
  int dim = 0;
  for (const Transition* t : batch)
    if (t->valid) {
      dim = static_cast<int>(t->q_gradient.size());
      break;
    }
  if (dim == 0) throw std::runtime_error("build_update: every transition in the batch is degraded");

  u.p = Eigen::VectorXd::Zero(dim);
  u.H = Eigen::MatrixXd::Zero(dim, dim);
  double abs_delta = 0.0;
  for (const Transition* t : batch) {
    if (!t->valid) {
      ++u.skipped;
      continue;
    }
    const double delta = td_error(*t, cfg);
    abs_delta += std::abs(delta);
    u.p.noalias() -= delta * t->q_gradient;
    u.H.noalias() += t->q_gradient * t->q_gradient.transpose();
    if (cfg.second_order_term && t->q_hessian.size() > 0) u.H.noalias() -= delta * t->q_hessian;
    ++u.used;
  }
  u.mean_abs_delta = u.used > 0 ? abs_delta / u.used : 0.0;
  return u;
}

UpdateReport apply_update(mpc::ThetaVector& theta, const UpdateData& update, double alpha,
                          const LearnerConfig& cfg) {
  const int n = theta.dim();
  UpdateReport rep;
  rep.p_norm = update.p.norm();
  rep.mean_abs_delta = update.mean_abs_delta;
  rep.used = update.used;
  rep.skipped = update.skipped;
  rep.delta_theta = Eigen::VectorXd::Zero(n);

  // smallest shift that lifts the minimum eigenvalue to the configured floor
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(update.H);
  const double min_eig = eig.eigenvalues().minCoeff();
  const double max_eig = eig.eigenvalues().maxCoeff();
  const double beta = std::max(0.0, cfg.hessian_min_eig - min_eig);
  rep.regularization = beta;
  rep.h_condition = (max_eig + beta) / cfg.hessian_min_eig;
  if (min_eig + beta > 0.0) rep.h_condition = (max_eig + beta) / (min_eig + beta);

  nlp::BoxQp qp;
  qp.H = update.H + beta * Eigen::MatrixXd::Identity(n, n);
  qp.g = alpha * update.p;
  qp.lb.resize(n);
  qp.ub.resize(n);
  for (int i = 0; i < n; ++i) {
    const double rate = cfg.max_rel_step * std::max(std::abs(theta.value[i]), cfg.rate_limit_floor);
    qp.lb[i] = std::max(theta.lb[i] - theta.value[i], -rate);
    qp.ub[i] = std::min(theta.ub[i] - theta.value[i], rate);
  }

  try {
    const nlp::BoxQpResult sol = solve_box_qp(qp);
    rep.delta_theta = sol.x;
  } catch (const std::exception&) {
    rep.ok = false;
    return rep;  // no-op update
  }

  for (int i = 0; i < n; ++i) {
    if (rep.delta_theta[i] <= qp.lb[i] + 1e-12 || rep.delta_theta[i] >= qp.ub[i] - 1e-12)
      rep.active_bounds.push_back(i);
    theta.value[i] =
        std::min(std::max(theta.value[i] + rep.delta_theta[i], theta.lb[i]), theta.ub[i]);
  }
  return rep;
}

}  // namespace ramplab::rl
