#include "ramplab/nlp/sensitivity.hpp"

#include <stdexcept>
#include <vector>

namespace ramplab::nlp {

Eigen::VectorXd parametric_value_gradient(const NlpProblem& problem, const NlpSolution& solution,
                                          const Eigen::VectorXd& params) {
  if (solution.status != SolveStatus::optimal)
    throw std::logic_error("parametric_value_gradient: solution is not optimal");
  if (solution.primal.size() != problem.num_vars() || params.size() != problem.num_params())
    throw std::invalid_argument("parametric_value_gradient: dimension mismatch");

  std::vector<double> vars(solution.primal.data(), solution.primal.data() + solution.primal.size());
  std::vector<double> pvec(params.data(), params.data() + params.size());
  std::vector<double> values;
  problem.graph.evaluate_all(vars, pvec, values);

  std::vector<std::pair<ad::NodeId, double>> seeds;
  seeds.reserve(1 + problem.num_eq() + problem.num_ineq());
  seeds.emplace_back(problem.objective, 1.0);
  for (int r = 0; r < problem.num_eq(); ++r)
    seeds.emplace_back(problem.equality_constraints[r], solution.eq_multipliers[r]);
  for (int r = 0; r < problem.num_ineq(); ++r)
    seeds.emplace_back(problem.inequality_constraints[r], solution.ineq_multipliers[r]);

  std::vector<double> adjoints;
  problem.graph.reverse(values, seeds, adjoints);

  Eigen::VectorXd grad(problem.num_params());
  for (int k = 0; k < problem.num_params(); ++k) grad[k] = adjoints[problem.parameters[k]];
  return grad;
}

}  // namespace ramplab::nlp
