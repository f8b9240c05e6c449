#include "ramplab/nlp/problem.hpp"

#include <stdexcept>

namespace ramplab::nlp {

ad::Expr NlpProblem::new_variable(double lb, double ub) {
  if (finalized()) throw std::logic_error("NlpProblem: cannot add variables after finalize");
  const ad::NodeId id = graph.variable();
  variables.push_back(id);
  bounds.push_back(VariableBounds{lb, ub});
  return ad::wrap(graph, id);
}

ad::Expr NlpProblem::new_parameter() {
  if (finalized()) throw std::logic_error("NlpProblem: cannot add parameters after finalize");
  const ad::NodeId id = graph.parameter();
  parameters.push_back(id);
  return ad::wrap(graph, id);
}

void NlpProblem::finalize() {
  if (finalized()) return;
  if (objective_terms.empty()) {
    objective = graph.constant(0.0);
  } else {
    ad::NodeId acc = objective_terms.front();
    for (std::size_t i = 1; i < objective_terms.size(); ++i)
      acc = graph.add(acc, objective_terms[i]);
    objective = acc;
  }
  graph.outputs.clear();
  graph.outputs.push_back(objective);
  for (ad::NodeId id : equality_constraints) graph.outputs.push_back(id);
  for (ad::NodeId id : inequality_constraints) graph.outputs.push_back(id);
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max-iter";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::diverged: return "diverged";
  }
  return "unknown";
}

}  // namespace ramplab::nlp
