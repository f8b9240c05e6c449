#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

#include "ramplab/ad/graph.hpp"

namespace ramplab::nlp {

struct VariableBounds {
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  bool has_lb() const { return lb > -std::numeric_limits<double>::infinity(); }
  bool has_ub() const { return ub < std::numeric_limits<double>::infinity(); }
};

/// min f(z; p)  s.t.  c_E(z; p) = 0,  c_I(z; p) <= 0,  lb <= z <= ub.
///
/// The objective is registered as a list of scalar terms; the solver sums
/// them in index order, which keeps both evaluation and differentiation
/// piecewise and cheap. finalize() folds the terms into the single objective
/// node the problem exposes.
struct NlpProblem {
  ad::ExpressionGraph graph;
  std::vector<ad::NodeId> variables;   // leaf node per decision variable, slot order
  std::vector<ad::NodeId> parameters;  // leaf node per parameter, slot order
  std::vector<VariableBounds> bounds;  // per variable
  std::vector<ad::NodeId> objective_terms;
  std::vector<ad::NodeId> equality_constraints;
  std::vector<ad::NodeId> inequality_constraints;
  ad::NodeId objective = -1;

  int num_vars() const { return static_cast<int>(variables.size()); }
  int num_params() const { return static_cast<int>(parameters.size()); }
  int num_eq() const { return static_cast<int>(equality_constraints.size()); }
  int num_ineq() const { return static_cast<int>(inequality_constraints.size()); }

  ad::Expr new_variable(double lb = -std::numeric_limits<double>::infinity(),
                        double ub = std::numeric_limits<double>::infinity());
  ad::Expr new_parameter();
  void add_objective_term(ad::Expr e) { objective_terms.push_back(e.id); }
  void add_equality(ad::Expr e) { equality_constraints.push_back(e.id); }
  void add_inequality(ad::Expr e) { inequality_constraints.push_back(e.id); }

  void finalize();
  bool finalized() const { return objective >= 0; }
};

enum class SolveStatus { optimal, max_iter, infeasible, diverged };

const char* to_string(SolveStatus s);

/// Primal-dual optimum of one solve. Everything the barrier method needs to
/// resume is kept so a later solve can warm-start from this object.
struct NlpSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd ineq_multipliers;  // >= 0
  double objective = 0.0;
  SolveStatus status = SolveStatus::diverged;
  double stationarity_residual = std::numeric_limits<double>::infinity();
  double primal_residual = std::numeric_limits<double>::infinity();
  double complementarity_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;

  // warm-start state
  Eigen::VectorXd ineq_slacks;
  Eigen::VectorXd bound_dual_lower;
  Eigen::VectorXd bound_dual_upper;
  double barrier_mu = 0.0;

  double kkt_residual() const {
    return std::max({stationarity_residual, primal_residual, complementarity_residual});
  }
};

}  // namespace ramplab::nlp
