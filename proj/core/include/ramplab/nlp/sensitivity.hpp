#pragma once

#include <Eigen/Core>

#include "ramplab/nlp/problem.hpp"

namespace ramplab::nlp {

/// Gradient of the optimal value with respect to the problem parameters:
/// d/dp of the Lagrangian f + yE'cE + yI'cI evaluated at the stored
/// primal-dual optimum (one reverse sweep over the whole tape). Requires an
/// optimal solution; throws std::logic_error otherwise.
Eigen::VectorXd parametric_value_gradient(const NlpProblem& problem, const NlpSolution& solution,
                                          const Eigen::VectorXd& params);

}  // namespace ramplab::nlp
