#include "ramplab/nlp/box_qp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ramplab::nlp {

namespace {

// KKT violation: projected-gradient infinity norm.
double kkt_violation(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                     const Eigen::VectorXd& lb, const Eigen::VectorXd& ub, double edge) {
  double viol = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double v;
    if (x[i] <= lb[i] + edge)
      v = std::max(0.0, -grad[i]);  // at lower bound, gradient must be >= 0
    else if (x[i] >= ub[i] - edge)
      v = std::max(0.0, grad[i]);
    else
      v = std::abs(grad[i]);
    viol = std::max(viol, v);
  }
  return viol;
}

}  // namespace

// Primal active-set iteration (Nocedal & Wright 16.5 specialized to boxes):
// solve the free block exactly, walk toward it until a bound blocks, add the
// blocker; at a working-set optimum drop the bound with the most negative
// multiplier. Strict convexity of H makes the loop finite.
BoxQpResult solve_box_qp(const BoxQp& qp, double tol) {
  const int n = static_cast<int>(qp.g.size());
  if (qp.H.rows() != n || qp.H.cols() != n || qp.lb.size() != n || qp.ub.size() != n)
    throw std::invalid_argument("solve_box_qp: inconsistent dimensions");
  for (int i = 0; i < n; ++i)
    if (qp.lb[i] > qp.ub[i]) throw std::invalid_argument("solve_box_qp: crossed bounds");

  Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("solve_box_qp: H is not positive definite; regularize it first");

  BoxQpResult res;
  Eigen::VectorXd x = llt.solve(-qp.g);

  // working set: 0 free, 1 at lower bound, 2 at upper bound
  std::vector<int> ws(n, 0);
  for (int i = 0; i < n; ++i) {
    if (x[i] <= qp.lb[i]) {
      x[i] = qp.lb[i];
      ws[i] = 1;
    } else if (x[i] >= qp.ub[i]) {
      x[i] = qp.ub[i];
      ws[i] = 2;
    }
  }

  const double scale = std::max(1.0, qp.g.cwiseAbs().maxCoeff());
  const double edge = 1e-14 * scale;

  std::vector<int> free_idx;
  const int max_iter = 100 + 30 * n * n;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;

    free_idx.clear();
    for (int i = 0; i < n; ++i)
      if (ws[i] == 0) free_idx.push_back(i);
    const int nf = static_cast<int>(free_idx.size());

    // subspace optimum with the working set pinned
    Eigen::VectorXd target = x;
    if (nf > 0) {
      Eigen::MatrixXd Hff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        for (int b = 0; b < nf; ++b) Hff(a, b) = qp.H(free_idx[a], free_idx[b]);
        double fixed = qp.g[free_idx[a]];
        for (int j = 0; j < n; ++j)
          if (ws[j] != 0) fixed += qp.H(free_idx[a], j) * x[j];
        rhs[a] = -fixed;
      }
      const Eigen::VectorXd xf = Hff.llt().solve(rhs);
      for (int a = 0; a < nf; ++a) target[free_idx[a]] = xf[a];
    }

    // longest feasible step toward the subspace optimum
    double alpha = 1.0;
    int blocker = -1, blocker_side = 0;
    for (int a = 0; a < nf; ++a) {
      const int i = free_idx[a];
      const double d = target[i] - x[i];
      if (d > 0.0 && x[i] + d > qp.ub[i]) {
        const double am = (qp.ub[i] - x[i]) / d;
        if (am < alpha) {
          alpha = am;
          blocker = i;
          blocker_side = 2;
        }
      } else if (d < 0.0 && x[i] + d < qp.lb[i]) {
        const double am = (qp.lb[i] - x[i]) / d;
        if (am < alpha) {
          alpha = am;
          blocker = i;
          blocker_side = 1;
        }
      }
    }

    if (blocker >= 0) {
      for (int a = 0; a < nf; ++a) {
        const int i = free_idx[a];
        x[i] += alpha * (target[i] - x[i]);
        x[i] = std::min(std::max(x[i], qp.lb[i]), qp.ub[i]);
      }
      x[blocker] = blocker_side == 1 ? qp.lb[blocker] : qp.ub[blocker];
      ws[blocker] = blocker_side;
      continue;
    }

    // full step reaches the working-set optimum; check bound multipliers
    x = target;
    const Eigen::VectorXd grad = qp.H * x + qp.g;
    int drop = -1;
    double most_negative = -tol;
    for (int i = 0; i < n; ++i) {
      if (ws[i] == 0) continue;
      const double lambda = ws[i] == 1 ? grad[i] : -grad[i];
      if (lambda < most_negative) {
        most_negative = lambda;
        drop = i;
      }
    }
    if (drop < 0) {
      res.kkt_residual = kkt_violation(x, grad, qp.lb, qp.ub, edge);
      break;
    }
    ws[drop] = 0;
  }

  res.x = std::move(x);
  const Eigen::VectorXd grad = qp.H * res.x + qp.g;
  res.kkt_residual = kkt_violation(res.x, grad, qp.lb, qp.ub, edge);
  return res;
}

}  // namespace ramplab::nlp
