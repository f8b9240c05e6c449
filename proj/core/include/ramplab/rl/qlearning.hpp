#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "ramplab/mpc/theta.hpp"

namespace ramplab::rl {

/// One controller-timescale sample: the state where the control move was
/// chosen, the applied flow, the stage cost accumulated over the M process
/// substeps, and the evaluation results the update needs (Q and its
/// theta-gradient at (s,a), V at the next state).
struct Transition {
  int episode = 0;
  int index = 0;
  Eigen::VectorXd state;
  double action = 0.0;
  Eigen::VectorXd disturbance;
  double cost = 0.0;
  Eigen::VectorXd next_state;
  double q_value = 0.0;
  double next_value = 0.0;
  Eigen::VectorXd q_gradient;
  Eigen::MatrixXd q_hessian;  // populated only in finite-difference mode
  bool valid = true;          // false when either solve of the pair was degraded
};

/// Ring of the most recent episodes of transitions; eviction is strictly
/// FIFO by episode.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity_episodes = 10) : capacity_(capacity_episodes) {}

  void push(Transition t);
  int num_episodes() const { return static_cast<int>(episodes_.size()); }
  int size() const;
  bool empty() const { return episodes_.empty(); }
  int transitions_per_episode() const;
  int capacity_episodes() const { return capacity_; }

  /// Transition by global recency order: 0 = oldest stored.
  const Transition& at(int i) const;
  int oldest_episode() const { return episodes_.empty() ? -1 : episodes_.front().front().episode; }

 private:
  int capacity_;
  std::deque<std::vector<Transition>> episodes_;
};

struct LearnerConfig {
  double gamma = 0.98;
  int td_discount_exponent = 1;  // 1 (per-transition) or M (per-process-step)
  double alpha_init = 0.925;
  double alpha_decay = 0.925;          // multiplicative, per update
  double max_rel_step = 0.3;           // |dtheta_j| <= 0.3 max(|theta_j|, floor)
  double rate_limit_floor = 1e-3;
  int batch_episodes = 5;
  double recent_fraction = 0.5;        // share of the batch from the recent stratum
  double recent_window_episodes = 2.5;
  double sigma_q_init = 0.025;
  double epsilon_init = 0.5;
  double exploration_decay = 0.5;      // per episode, applied to sigma_q and epsilon
  bool second_order_term = false;      // subtract sum delta_i * d2Q_i in the hessian
  double hessian_min_eig = 1e-6;
};

/// Mutable schedule state separated from the static configuration.
struct LearnerSchedules {
  double alpha = 0.925;
  double sigma_q = 0.025;
  double epsilon = 0.5;

  static LearnerSchedules from(const LearnerConfig& cfg) {
    return {cfg.alpha_init, cfg.sigma_q_init, cfg.epsilon_init};
  }
  void decay_after_update(const LearnerConfig& cfg) { alpha *= cfg.alpha_decay; }
  void decay_after_episode(const LearnerConfig& cfg) {
    sigma_q *= cfg.exploration_decay;
    epsilon *= cfg.exploration_decay;
  }
};

/// delta = L + gamma^e V(s') - Q(s,a) from the stored evaluations.
double td_error(const Transition& t, const LearnerConfig& cfg);

/// Batch of batch_episodes * transitions-per-episode samples: a recent
/// stratum drawn from the latest recent_window_episodes' worth of
/// transitions, the rest uniform over older content; with replacement
/// whenever a stratum is short.
std::vector<const Transition*> sample_batch(const ReplayBuffer& buffer, const LearnerConfig& cfg,
                                            std::mt19937_64& rng);

struct UpdateData {
  Eigen::VectorXd p;
  Eigen::MatrixXd H;
  double mean_abs_delta = 0.0;
  int used = 0;
  int skipped = 0;
};

/// p = -sum delta_i dQ_i, H = sum dQ_i dQ_i' (minus sum delta_i d2Q_i when
/// the config enables the second-order term and transitions carry hessians).
/// Throws when every transition in the batch was degraded.
UpdateData build_update(const std::vector<const Transition*>& batch, const LearnerConfig& cfg);

struct UpdateReport {
  double p_norm = 0.0;
  double h_condition = 0.0;
  double regularization = 0.0;  // beta added to the hessian diagonal
  Eigen::VectorXd delta_theta;
  std::vector<int> active_bounds;
  double mean_abs_delta = 0.0;
  int used = 0;
  int skipped = 0;
  bool ok = true;
};

/// One box-constrained second-order step: H is shifted positive definite,
/// the step solves min 0.5 d'Hd + alpha p'd inside the intersection of the
/// absolute parameter bounds and the per-parameter rate limits.
UpdateReport apply_update(mpc::ThetaVector& theta, const UpdateData& update, double alpha,
                          const LearnerConfig& cfg);

}  // namespace ramplab::rl
