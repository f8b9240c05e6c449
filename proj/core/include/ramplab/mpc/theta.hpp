#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ramplab/traffic/types.hpp"

namespace ramplab::mpc {

/// Which prediction-model parameters are learnable, and whether the quadratic
/// cost setpoints follow the learned values instead of the fixed constants.
struct AblationFlags {
  bool learn_rho_crit = true;
  bool learn_a = true;
  bool learn_v_free = false;
  bool setpoints_track_learned = false;
};

/// Prediction horizon bookkeeping. The controller runs every M process steps;
/// the last control move is held constant for the remainder of the horizon.
struct HorizonConfig {
  int Np = 24;
  int Nc = 3;
  int M = 6;
  double gamma = 0.98;

  int control_index(int i) const { return std::min(i / M, Nc - 1); }
  void validate() const;
};

/// Offsets of each named block inside the flat learnable vector; -1 marks a
/// block absent under the current ablation flags.
struct ThetaLayout {
  int rho_crit = -1;
  int a = -1;
  int v_free = -1;
  int theta_T = -1;
  int theta_V = -1;
  int Theta_C = -1;  // length Np+1 (single constrained on-ramp)
  int lam_rho = -1, lam_v = -1, lam_w = -1;
  int ell_rho = -1, ell_v = -1, ell_w = -1;
  int gam_rho = -1, gam_v = -1, gam_w = -1;
  int n_segments = 0, n_origins = 0, Np = 0;
  int dim = 0;

  static ThetaLayout make(const AblationFlags& flags, int n_segments, int n_origins, int Np);
  std::string name(int index) const;
};

/// The learnable MPC parametrisation: value, per-entry bounds, and the layout
/// that maps named blocks to entries. Default dimension for the benchmark is
/// 2 + 2 + 25 + 9 + 9 + 6 = 53.
struct ThetaVector {
  ThetaLayout layout;
  Eigen::VectorXd value;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int dim() const { return layout.dim; }
  bool within_bounds(double tol = 0.0) const;

  /// Initial values and bounds: learnable model parameters start with the
  /// configured mismatch factors applied to the true values; cost weights
  /// start untuned at their documented initial values.
  static ThetaVector initial(const AblationFlags& flags, const traffic::NetworkTopology& topo,
                             const traffic::MetanetParams& true_params, const HorizonConfig& horizon,
                             double rho_crit_factor = 0.7, double a_factor = 1.3,
                             double v_free_factor = 1.3);

  /// All-zero weights with the model parameters kept; test helper for the
  /// degenerate zero-objective controller.
  ThetaVector with_zero_weights() const;
};

}  // namespace ramplab::mpc
