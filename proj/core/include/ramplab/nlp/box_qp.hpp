#pragma once

#include <Eigen/Core>

namespace ramplab::nlp {

/// min 0.5 d'Hd + g'd subject to lb <= d <= ub, with H symmetric positive
/// definite (callers regularize first).
struct BoxQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
};

struct BoxQpResult {
  Eigen::VectorXd x;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Active-set iteration with exact free-subspace solves. Throws
/// std::invalid_argument when H is not positive definite (the caller is
/// expected to shift it first).
BoxQpResult solve_box_qp(const BoxQp& qp, double tol = 1e-10);

}  // namespace ramplab::nlp
