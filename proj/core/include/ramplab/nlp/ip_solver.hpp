#pragma once

#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "ramplab/nlp/problem.hpp"

namespace ramplab::nlp {

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 500;
  double mu_init = 0.1;
  bool verbose = false;
};

class IpWorkspace;

/// Primal-dual interior-point method with slack variables for inequalities,
/// a Waechter-Biegler filter line search, monotone barrier reduction, and
/// inertia-corrected sparse LDL^T KKT solves. The solver object holds only
/// immutable per-problem structure (subtapes, sparsity, scatter maps) and may
/// be shared across threads; each concurrent solve needs its own workspace.
class IpSolver {
 public:
  explicit IpSolver(const NlpProblem& problem);
  ~IpSolver();
  IpSolver(const IpSolver&) = delete;
  IpSolver& operator=(const IpSolver&) = delete;

  NlpSolution solve(IpWorkspace& ws, const Eigen::VectorXd& params,
                    const Eigen::VectorXd& initial_guess, const SolverOptions& opts = {},
                    const NlpSolution* warm_start = nullptr) const;

  /// One-shot convenience entry point.
  NlpSolution solve(const Eigen::VectorXd& params, const Eigen::VectorXd& initial_guess,
                    const SolverOptions& opts = {}, const NlpSolution* warm_start = nullptr) const;

  const NlpProblem& problem() const { return *prob_; }

  struct Impl;

 private:
  const NlpProblem* prob_;
  std::unique_ptr<Impl> impl_;
};

/// Reusable per-thread solve state: KKT matrix, cached symbolic factorization
/// and assorted buffers. Reusing one across the repeated solves of a
/// receding-horizon loop avoids re-running the fill-in analysis every time.
class IpWorkspace {
 public:
  Eigen::SparseMatrix<double> kkt;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  bool analyzed = false;
  std::vector<double> tape_values;
  std::vector<double> trial_values;
  std::vector<double> scratch;
  std::vector<double> piece_buffer;
  double last_reg = 0.0;
};

/// Convenience wrapper: build the solver structure, solve once.
NlpSolution solve_nlp(const NlpProblem& problem, const Eigen::VectorXd& params,
                      const Eigen::VectorXd& initial_guess, const SolverOptions& opts = {},
                      const NlpSolution* warm_start = nullptr);

}  // namespace ramplab::nlp
