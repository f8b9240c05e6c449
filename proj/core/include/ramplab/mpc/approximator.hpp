#pragma once

#include <memory>
#include <optional>

#include "ramplab/mpc/theta.hpp"
#include "ramplab/nlp/ip_solver.hpp"
#include "ramplab/nlp/sensitivity.hpp"
#include "ramplab/traffic/metanet.hpp"

namespace ramplab::mpc {

/// Fixed, non-learnable quantities of the prediction problem: tracking
/// setpoints, cost normalizers, and the (deliberately mismatched) free-flow
/// speed the prediction model uses.
struct FixedMpcConstants {
  double rho_sp = 23.45;
  double v_sp = 132.6;
  double rho_max = 180.0;
  double v_max = 132.6;
  double w_max = 50.0;
  double v_free_fixed = 132.6;
  // believed model values used when the corresponding parameter is not
  // learnable, and for the frozen boundary quantities of the prediction
  double rho_crit_fixed = 23.45;
  double a_fixed = 2.4271;

  /// Mismatched constants derived from the true parameters: the believed
  /// critical density doubles as the density setpoint, and the believed
  /// free-flow speed as both speed setpoint and normalizer.
  static FixedMpcConstants mismatched(const traffic::MetanetParams& true_params,
                                      double rho_crit_factor = 0.7, double a_factor = 1.3,
                                      double v_free_factor = 1.3);
};

enum class HessianMode { gauss_newton, finite_difference };

/// One MPC evaluation: optimal value, the first optimal control move, and the
/// primal-dual solution the learner differentiates later.
struct MpcEvalResult {
  double value = 0.0;
  double first_action = 0.0;
  nlp::NlpSolution solution;
  double wall_time_s = 0.0;
  nlp::SolveStatus status = nlp::SolveStatus::diverged;
  bool degraded = false;
  Eigen::VectorXd params;  // packed NLP parameter vector of this solve
};

/// The parametric MPC of the controller: built once, then evaluated as
/// V(x), Q(x,u) and pi(x) from NLP solves, with theta-sensitivities read off
/// the Lagrangian. One instance drives one simulation run; evaluation order
/// matters because solves warm-start from their predecessors.
class MpcApproximator {
 public:
  MpcApproximator(const traffic::NetworkTopology& topo, const traffic::MetanetParams& model_params,
                  const HorizonConfig& horizon, const FixedMpcConstants& consts,
                  const AblationFlags& flags, const nlp::SolverOptions& solver_opts = {});

  const nlp::NlpProblem& value_problem() const { return *v_problem_; }
  const nlp::NlpProblem& action_value_problem() const { return *q_problem_; }
  const HorizonConfig& horizon() const { return horizon_; }
  const AblationFlags& flags() const { return flags_; }
  const FixedMpcConstants& constants() const { return consts_; }

  /// Reset warm-start memory at an episode boundary and seed the previous
  /// applied flow used by the variability cost.
  void reset(double previous_action);
  void set_previous_action(double r) { u_prev_ = r; }
  double previous_action() const { return u_prev_; }

  /// V_theta(x): solve with the first move free; returns the value and the
  /// first optimal action. On solver failure returns the previous applied
  /// action with the degraded flag set.
  MpcEvalResult eval_value(const traffic::TrafficState& x, const traffic::Disturbance& d,
                           const ThetaVector& theta, double perturbation = 0.0);

  /// Q_theta(x,u): same problem with the first move pinned to u.
  MpcEvalResult eval_action_value(const traffic::TrafficState& x, const traffic::Disturbance& d,
                                  double u, const ThetaVector& theta);

  /// d(Q)/d(theta) via the Lagrangian of the stored optimal solution.
  Eigen::VectorXd theta_gradient_of_Q(const MpcEvalResult& result, const ThetaVector& theta) const;

  /// finite_difference: symmetric FD Jacobian of theta_gradient_of_Q (dim-theta
  /// extra solves). gauss_newton: empty matrix; the learner assembles
  /// grad*grad' itself.
  Eigen::MatrixXd theta_hessian_of_Q(const MpcEvalResult& result, const ThetaVector& theta,
                                     HessianMode mode);

  /// Packed parameter vector for the value problem (exposed for tests).
  Eigen::VectorXd pack_value_params(const traffic::TrafficState& x, const traffic::Disturbance& d,
                                    const ThetaVector& theta, double perturbation) const;

  int theta_dim() const { return theta_dim_; }

 private:
  traffic::NetworkTopology topo_;
  traffic::MetanetParams model_;
  HorizonConfig horizon_;
  FixedMpcConstants consts_;
  AblationFlags flags_;
  nlp::SolverOptions solver_opts_;
  int theta_dim_ = 0;
  int ramp_origin_ = -1;       // the single metered on-ramp
  int mainstream_origin_ = -1;

  std::unique_ptr<nlp::NlpProblem> v_problem_, q_problem_;
  std::unique_ptr<nlp::IpSolver> v_solver_, q_solver_;
  nlp::IpWorkspace v_ws_, q_ws_;

  double u_prev_ = 0.0;
  std::optional<nlp::NlpSolution> last_v_solution_;
  std::optional<nlp::NlpSolution> last_q_solution_;

  void build_problems();
  Eigen::VectorXd cold_start_guess(const traffic::TrafficState& x, const Eigen::VectorXd& params) const;
  nlp::NlpSolution shifted_warm_start(const nlp::NlpSolution& prev) const;

  friend struct MpcBuildAccess;
};

}  // namespace ramplab::mpc
