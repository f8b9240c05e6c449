#include "ramplab/nlp/ip_solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace ramplab::nlp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Waechter-Biegler constants
constexpr double kTauMin = 0.99;
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-5;
constexpr double kEtaPhi = 1e-4;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kDeltaSwitch = 1.0;
constexpr double kKappaMu = 0.2;
constexpr double kThetaMu = 1.5;
constexpr double kKappaEps = 10.0;
constexpr double kKappaSigma = 1e10;  // dual safeguard
}  // namespace

struct PieceDeriv {
  ad::SubTape tape;
  std::vector<int> var_slots;
  std::vector<int> hess_index;  // local lower pair (a,b<=a) -> index into W values
};

struct IpSolver::Impl {
  int n = 0, mE = 0, mI = 0;
  std::vector<PieceDeriv> obj_pieces, eq_pieces, ineq_pieces;
  std::vector<std::pair<int, int>> w_entries;  // (row >= col)
  Eigen::VectorXd lb, ub;
  ad::NodeId obj_node = -1;
  std::vector<ad::NodeId> eq_nodes, ineq_nodes;

  PieceDeriv make_piece(const NlpProblem& p, ad::NodeId root,
                        std::map<std::pair<int, int>, int>& w_map) {
    PieceDeriv pd;
    pd.tape = ad::extract_subtape(p.graph, root);
    pd.var_slots.reserve(pd.tape.variables.size());
    for (const auto& [local, slot] : pd.tape.variables) pd.var_slots.push_back(slot);
    const int nv = static_cast<int>(pd.var_slots.size());
    pd.hess_index.resize(static_cast<std::size_t>(nv) * (nv + 1) / 2);
    int k = 0;
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b <= a; ++b) {
        int gi = pd.var_slots[a], gj = pd.var_slots[b];
        if (gi < gj) std::swap(gi, gj);
        auto [it, inserted] = w_map.try_emplace({gi, gj}, static_cast<int>(w_map.size()));
        pd.hess_index[k++] = it->second;
      }
    }
    return pd;
  }
};

IpSolver::IpSolver(const NlpProblem& problem) : prob_(&problem), impl_(new Impl) {
  if (!problem.finalized()) throw std::logic_error("IpSolver: problem must be finalized");
  Impl& im = *impl_;
  im.n = problem.num_vars();
  im.mE = problem.num_eq();
  im.mI = problem.num_ineq();
  im.obj_node = problem.objective;
  im.eq_nodes = problem.equality_constraints;
  im.ineq_nodes = problem.inequality_constraints;

  std::map<std::pair<int, int>, int> w_map;
  for (ad::NodeId t : problem.objective_terms) im.obj_pieces.push_back(im.make_piece(problem, t, w_map));
  for (ad::NodeId c : problem.equality_constraints) im.eq_pieces.push_back(im.make_piece(problem, c, w_map));
  for (ad::NodeId c : problem.inequality_constraints)
    im.ineq_pieces.push_back(im.make_piece(problem, c, w_map));

  im.w_entries.resize(w_map.size());
  for (const auto& [key, idx] : w_map) im.w_entries[idx] = key;

  im.lb.resize(im.n);
  im.ub.resize(im.n);
  for (int i = 0; i < im.n; ++i) {
    im.lb[i] = problem.bounds[i].lb;
    im.ub[i] = problem.bounds[i].ub;
    if (im.lb[i] > im.ub[i]) throw std::invalid_argument("IpSolver: variable bounds cross");
  }
}

IpSolver::~IpSolver() = default;

namespace {

struct Point {
  Eigen::VectorXd z, s;
  double f = 0.0;
  Eigen::VectorXd cE, cI;
  bool valid = false;
  double theta = 0.0;

  double barrier(double mu, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) const {
    double phi = f;
    for (int i = 0; i < s.size(); ++i) phi -= mu * std::log(s[i]);
    for (int i = 0; i < z.size(); ++i) {
      if (lb[i] > -kInf) phi -= mu * std::log(z[i] - lb[i]);
      if (ub[i] < kInf) phi -= mu * std::log(ub[i] - z[i]);
    }
    return phi;
  }
};

double theta_of(const Point& p) {
  double t = 0.0;
  for (int i = 0; i < p.cE.size(); ++i) t += std::abs(p.cE[i]);
  for (int i = 0; i < p.cI.size(); ++i) t += std::abs(p.cI[i] + p.s[i]);
  return t;
}

}  // namespace

NlpSolution IpSolver::solve(const Eigen::VectorXd& params, const Eigen::VectorXd& initial_guess,
                            const SolverOptions& opts, const NlpSolution* warm_start) const {
  IpWorkspace ws;
  return solve(ws, params, initial_guess, opts, warm_start);
}

NlpSolution IpSolver::solve(IpWorkspace& ws, const Eigen::VectorXd& params,
                            const Eigen::VectorXd& initial_guess, const SolverOptions& opts,
                            const NlpSolution* warm_start) const {
  const Impl& im = *impl_;
  const int n = im.n, mE = im.mE, mI = im.mI;
  const Eigen::VectorXd& lb = im.lb;
  const Eigen::VectorXd& ub = im.ub;

  std::vector<double> pvec(params.data(), params.data() + params.size());
  std::vector<double> zvec(n);

  // --- tape evaluation of f, cE, cI at a candidate primal point
  auto eval_point = [&](const Eigen::VectorXd& z, std::vector<double>& values, Point& pt) {
    std::copy(z.data(), z.data() + n, zvec.begin());
    const ad::NodeId bad = prob_->graph.try_evaluate_all(zvec, pvec, values);
    pt.z = z;
    pt.valid = bad < 0;
    if (!pt.valid) return;
    pt.f = values[im.obj_node];
    pt.cE.resize(mE);
    for (int r = 0; r < mE; ++r) pt.cE[r] = values[im.eq_nodes[r]];
    pt.cI.resize(mI);
    for (int r = 0; r < mI; ++r) pt.cI[r] = values[im.ineq_nodes[r]];
    if (!std::isfinite(pt.f) || !pt.cE.allFinite() || !pt.cI.allFinite()) pt.valid = false;
  };

  // --- first derivatives at the current point (values in ws.tape_values)
  Eigen::VectorXd grad_f(n);
  std::vector<std::vector<double>> JE(mE), JI(mI);
  std::vector<double> gbuf;
  auto eval_first_derivs = [&]() {
    grad_f.setZero();
    for (const auto& piece : im.obj_pieces) {
      piece.tape.gradient(ws.tape_values, gbuf, ws.scratch);
      for (std::size_t k = 0; k < piece.var_slots.size(); ++k)
        grad_f[piece.var_slots[k]] += gbuf[k];
    }
    for (int r = 0; r < mE; ++r) im.eq_pieces[r].tape.gradient(ws.tape_values, JE[r], ws.scratch);
    for (int r = 0; r < mI; ++r) im.ineq_pieces[r].tape.gradient(ws.tape_values, JI[r], ws.scratch);
  };

  // --- Lagrangian Hessian values on the W sparsity
  std::vector<double> wvals;
  auto eval_hessian = [&](const Eigen::VectorXd& yE, const Eigen::VectorXd& yI) {
    wvals.assign(im.w_entries.size(), 0.0);
    auto accumulate = [&](const PieceDeriv& piece, double weight) {
      if (weight == 0.0 || piece.var_slots.empty()) return;
      const int nv = static_cast<int>(piece.var_slots.size());
      piece.tape.hessian(ws.tape_values, ws.piece_buffer, ws.scratch);
      int k = 0;
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b <= a; ++b) {
          const double h =
              0.5 * (ws.piece_buffer[static_cast<std::size_t>(a) * nv + b] +
                     ws.piece_buffer[static_cast<std::size_t>(b) * nv + a]);
          wvals[piece.hess_index[k++]] += weight * h;
        }
    };
    for (const auto& piece : im.obj_pieces) accumulate(piece, 1.0);
    for (int r = 0; r < mE; ++r) accumulate(im.eq_pieces[r], yE[r]);
    for (int r = 0; r < mI; ++r) accumulate(im.ineq_pieces[r], yI[r]);
  };

  // --- residuals
  auto stationarity = [&](const Point& pt, const Eigen::VectorXd& yE, const Eigen::VectorXd& yI,
                          const Eigen::VectorXd& zL, const Eigen::VectorXd& zU) {
    Eigen::VectorXd r = grad_f;
    for (int e = 0; e < mE; ++e)
      for (std::size_t k = 0; k < im.eq_pieces[e].var_slots.size(); ++k)
        r[im.eq_pieces[e].var_slots[k]] += yE[e] * JE[e][k];
    for (int q = 0; q < mI; ++q)
      for (std::size_t k = 0; k < im.ineq_pieces[q].var_slots.size(); ++k)
        r[im.ineq_pieces[q].var_slots[k]] += yI[q] * JI[q][k];
    r -= zL;
    r += zU;
    (void)pt;
    return r;
  };

  auto compl_residual = [&](const Point& pt, const Eigen::VectorXd& yI, const Eigen::VectorXd& zL,
                            const Eigen::VectorXd& zU, double mu) {
    double c = 0.0;
    for (int i = 0; i < mI; ++i) c = std::max(c, std::abs(pt.s[i] * yI[i] - mu));
    for (int i = 0; i < n; ++i) {
      if (lb[i] > -kInf) c = std::max(c, std::abs((pt.z[i] - lb[i]) * zL[i] - mu));
      if (ub[i] < kInf) c = std::max(c, std::abs((ub[i] - pt.z[i]) * zU[i] - mu));
    }
    return c;
  };

  auto primal_residual = [&](const Point& pt) {
    double r = pt.cE.size() ? pt.cE.cwiseAbs().maxCoeff() : 0.0;
    for (int i = 0; i < mI; ++i) r = std::max(r, std::abs(pt.cI[i] + pt.s[i]));
    return r;
  };

  NlpSolution out;
  out.primal = initial_guess;
  out.status = SolveStatus::diverged;

  auto push_into_bounds = [&](Eigen::VectorXd& z) {
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(z[i])) z[i] = 0.0;
      if (lb[i] > -kInf && ub[i] < kInf) {
        const double pad = std::min(1e-2 * std::max(1.0, std::abs(lb[i])), 1e-2 * (ub[i] - lb[i]));
        z[i] = std::clamp(z[i], lb[i] + pad, ub[i] - pad);
      } else if (lb[i] > -kInf) {
        z[i] = std::max(z[i], lb[i] + 1e-2 * std::max(1.0, std::abs(lb[i])));
      } else if (ub[i] < kInf) {
        z[i] = std::min(z[i], ub[i] - 1e-2 * std::max(1.0, std::abs(ub[i])));
      }
    }
  };

  // --- initialization
  Point cur;
  cur.z = initial_guess;
  if (cur.z.size() != n) cur.z = Eigen::VectorXd::Zero(n);
  push_into_bounds(cur.z);

  double mu = std::clamp(opts.mu_init, opts.tol / 10.0, 1e5);
  Eigen::VectorXd yE = Eigen::VectorXd::Zero(mE);
  Eigen::VectorXd yI = Eigen::VectorXd::Constant(mI, 1.0);  // re-derived from the slacks below
  Eigen::VectorXd zL = Eigen::VectorXd::Zero(n), zU = Eigen::VectorXd::Zero(n);

  const bool warm = warm_start && warm_start->primal.size() == n &&
                    warm_start->ineq_slacks.size() == mI && warm_start->eq_multipliers.size() == mE;
  if (warm) {
    for (int i = 0; i < n; ++i) {
      double zi = warm_start->primal[i];
      if (!std::isfinite(zi)) zi = 0.0;
      if (lb[i] > -kInf) zi = std::max(zi, lb[i] + 1e-10 * std::max(1.0, std::abs(lb[i])));
      if (ub[i] < kInf) zi = std::min(zi, ub[i] - 1e-10 * std::max(1.0, std::abs(ub[i])));
      cur.z[i] = zi;
    }
    yE = warm_start->eq_multipliers;
    yI = warm_start->ineq_multipliers.cwiseMax(1e-10);
    mu = std::clamp(warm_start->barrier_mu > 0.0 ? warm_start->barrier_mu : 1e-6, opts.tol / 10.0,
                    1e-2);
  }

  eval_point(cur.z, ws.tape_values, cur);
  if (!cur.valid) {
    // retry from the origin pushed into the box
    cur.z.setZero();
    push_into_bounds(cur.z);
    eval_point(cur.z, ws.tape_values, cur);
    if (!cur.valid) {
      out.status = SolveStatus::diverged;
      return out;
    }
  }

  cur.s.resize(mI);
  for (int i = 0; i < mI; ++i) cur.s[i] = std::max(1e-3, -cur.cI[i]);
  if (warm) {
    for (int i = 0; i < mI; ++i)
      cur.s[i] = std::max(warm_start->ineq_slacks[i], 1e-10);
  } else {
    // exactly complementary dual start: s_i y_i = mu
    for (int i = 0; i < mI; ++i) yI[i] = std::clamp(mu / cur.s[i], 1e-8, 1e8);
  }

  for (int i = 0; i < n; ++i) {
    if (lb[i] > -kInf) zL[i] = mu / (cur.z[i] - lb[i]);
    if (ub[i] < kInf) zU[i] = mu / (ub[i] - cur.z[i]);
  }
  if (warm && warm_start->bound_dual_lower.size() == n) {
    zL = warm_start->bound_dual_lower.cwiseMax(0.0);
    zU = warm_start->bound_dual_upper.cwiseMax(0.0);
  }
  cur.theta = theta_of(cur);

  const double theta_max = 1e4 * std::max(1.0, cur.theta);
  const double theta_min = 1e-4 * std::max(1.0, cur.theta);
  std::vector<std::pair<double, double>> filter;  // (theta, phi)
  double tau = std::max(kTauMin, 1.0 - mu);

  const int N = n + mE + mI;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs(N), step(N);
  Eigen::VectorXd dz(n), dyE(mE), dyI(mI), ds(mI), dzL(n), dzU(n);
  Point trial;

  int iter = 0;
  int restoration_count = 0;

  auto fill_solution = [&](SolveStatus status) {
    out.status = status;
    out.primal = cur.z;
    out.eq_multipliers = yE;
    out.ineq_multipliers = yI;
    out.objective = cur.f;
    out.iterations = iter;
    out.ineq_slacks = cur.s;
    out.bound_dual_lower = zL;
    out.bound_dual_upper = zU;
    out.barrier_mu = mu;
    const Eigen::VectorXd rs = stationarity(cur, yE, yI, zL, zU);
    out.stationarity_residual = rs.size() ? rs.cwiseAbs().maxCoeff() : 0.0;
    out.primal_residual = primal_residual(cur);
    out.complementarity_residual = compl_residual(cur, yI, zL, zU, 0.0);
  };

  while (true) {
    eval_first_derivs();

    const Eigen::VectorXd r_stat = stationarity(cur, yE, yI, zL, zU);
    const double e_stat = r_stat.size() ? r_stat.cwiseAbs().maxCoeff() : 0.0;
    const double e_pri = primal_residual(cur);
    const double e_compl0 = compl_residual(cur, yI, zL, zU, 0.0);
    const double e0 = std::max({e_stat, e_pri, e_compl0});
    if (opts.verbose)
      std::printf("it %3d  mu %.2e  f % .8e  th %.2e  stat %.2e  compl %.2e\n", iter, mu, cur.f,
                  cur.theta, e_stat, e_compl0);
    if (e0 <= opts.tol) {
      fill_solution(SolveStatus::optimal);
      return out;
    }
    if (iter >= opts.max_iter) {
      fill_solution(SolveStatus::max_iter);
      return out;
    }

    // barrier continuation
    const double e_mu = std::max({e_stat, e_pri, compl_residual(cur, yI, zL, zU, mu)});
    if (e_mu <= kKappaEps * mu && mu > opts.tol / 10.0) {
      mu = std::max(opts.tol / 10.0, std::min(kKappaMu * mu, std::pow(mu, kThetaMu)));
      tau = std::max(kTauMin, 1.0 - mu);
      filter.clear();
      continue;
    }

    // dual safeguard: keep bound duals within a mu-dependent band
    for (int i = 0; i < n; ++i) {
      if (lb[i] > -kInf) {
        const double g = mu / (cur.z[i] - lb[i]);
        zL[i] = std::clamp(zL[i], g / kKappaSigma, g * kKappaSigma);
      }
      if (ub[i] < kInf) {
        const double g = mu / (ub[i] - cur.z[i]);
        zU[i] = std::clamp(zU[i], g / kKappaSigma, g * kKappaSigma);
      }
    }

    eval_hessian(yE, yI);

    // KKT assembly + inertia-corrected factorization
    double dw = 0.0, dc = 0.0;
    bool factored = false;
    for (int attempt = 0; attempt < 40 && !factored; ++attempt) {
      trips.clear();
      for (std::size_t k = 0; k < im.w_entries.size(); ++k)
        trips.emplace_back(im.w_entries[k].first, im.w_entries[k].second, wvals[k]);
      for (int i = 0; i < n; ++i) {
        double d = dw;
        if (lb[i] > -kInf) d += zL[i] / (cur.z[i] - lb[i]);
        if (ub[i] < kInf) d += zU[i] / (ub[i] - cur.z[i]);
        trips.emplace_back(i, i, d);
      }
      for (int r = 0; r < mE; ++r) {
        for (std::size_t k = 0; k < im.eq_pieces[r].var_slots.size(); ++k)
          trips.emplace_back(n + r, im.eq_pieces[r].var_slots[k], JE[r][k]);
        trips.emplace_back(n + r, n + r, -dc);
      }
      for (int r = 0; r < mI; ++r) {
        for (std::size_t k = 0; k < im.ineq_pieces[r].var_slots.size(); ++k)
          trips.emplace_back(n + mE + r, im.ineq_pieces[r].var_slots[k], JI[r][k]);
        trips.emplace_back(n + mE + r, n + mE + r, -cur.s[r] / yI[r] - dc);
      }
      ws.kkt.resize(N, N);
      ws.kkt.setFromTriplets(trips.begin(), trips.end());
      if (!ws.analyzed) {
        ws.ldlt.analyzePattern(ws.kkt);
        ws.analyzed = true;
      }
      ws.ldlt.factorize(ws.kkt);

      bool ok = ws.ldlt.info() == Eigen::Success;
      if (ok) {
        const auto& D = ws.ldlt.vectorD();
        int pos = 0, neg = 0, bad = 0;
        for (int i = 0; i < D.size(); ++i) {
          if (!std::isfinite(D[i]) || D[i] == 0.0)
            ++bad;
          else if (D[i] > 0.0)
            ++pos;
          else
            ++neg;
        }
        ok = bad == 0 && pos == n && neg == mE + mI;
      }
      if (ok) {
        factored = true;
        ws.last_reg = dw;
      } else {
        if (dc == 0.0) dc = 1e-8 * std::pow(mu, 0.25);
        if (dw == 0.0)
          dw = ws.last_reg > 0.0 ? std::max(1e-20, ws.last_reg / 3.0) : 1e-4;
        else
          dw *= 8.0;
        if (dw > 1e40) {
          fill_solution(SolveStatus::diverged);
          return out;
        }
      }
    }
    if (!factored) {
      fill_solution(SolveStatus::diverged);
      return out;
    }

    // rhs
    for (int i = 0; i < n; ++i) {
      double g = r_stat[i];
      // replace -zL + zU by their mu-perturbed values: primal-dual rhs
      if (lb[i] > -kInf) g += zL[i] - mu / (cur.z[i] - lb[i]);
      if (ub[i] < kInf) g += -zU[i] + mu / (ub[i] - cur.z[i]);
      rhs[i] = -g;
    }
    for (int r = 0; r < mE; ++r) rhs[n + r] = -cur.cE[r];
    for (int r = 0; r < mI; ++r) rhs[n + mE + r] = -cur.cI[r] - mu / yI[r];

    step = ws.ldlt.solve(rhs);
    if (!step.allFinite()) {
      fill_solution(SolveStatus::diverged);
      return out;
    }
    dz = step.head(n);
    dyE = step.segment(n, mE);
    dyI = step.tail(mI);
    auto ji_row_dot = [&](int row) {
      double acc = 0.0;
      for (std::size_t k = 0; k < im.ineq_pieces[row].var_slots.size(); ++k)
        acc += JI[row][k] * dz[im.ineq_pieces[row].var_slots[k]];
      return acc;
    };
    for (int i = 0; i < mI; ++i) ds[i] = -(cur.cI[i] + cur.s[i]) - ji_row_dot(i);
    for (int i = 0; i < n; ++i) {
      dzL[i] = lb[i] > -kInf ? mu / (cur.z[i] - lb[i]) - zL[i] - zL[i] / (cur.z[i] - lb[i]) * dz[i] : 0.0;
      dzU[i] = ub[i] < kInf ? mu / (ub[i] - cur.z[i]) - zU[i] + zU[i] / (ub[i] - cur.z[i]) * dz[i] : 0.0;
    }

    // fraction-to-boundary step limits
    double a_pri = 1.0, a_dual = 1.0;
    for (int i = 0; i < mI; ++i)
      if (ds[i] < 0.0) a_pri = std::min(a_pri, -tau * cur.s[i] / ds[i]);
    for (int i = 0; i < n; ++i) {
      if (lb[i] > -kInf && dz[i] < 0.0) a_pri = std::min(a_pri, -tau * (cur.z[i] - lb[i]) / dz[i]);
      if (ub[i] < kInf && dz[i] > 0.0) a_pri = std::min(a_pri, tau * (ub[i] - cur.z[i]) / dz[i]);
    }
    for (int i = 0; i < mI; ++i)
      if (dyI[i] < 0.0) a_dual = std::min(a_dual, -tau * yI[i] / dyI[i]);
    for (int i = 0; i < n; ++i) {
      if (dzL[i] < 0.0 && zL[i] > 0.0) a_dual = std::min(a_dual, -tau * zL[i] / dzL[i]);
      if (dzU[i] < 0.0 && zU[i] > 0.0) a_dual = std::min(a_dual, -tau * zU[i] / dzU[i]);
    }

    // filter line search on (z, s)
    const double phi0 = cur.barrier(mu, lb, ub);
    double dphi = grad_f.dot(dz);
    for (int i = 0; i < mI; ++i) dphi -= mu * ds[i] / cur.s[i];
    for (int i = 0; i < n; ++i) {
      if (lb[i] > -kInf) dphi -= mu * dz[i] / (cur.z[i] - lb[i]);
      if (ub[i] < kInf) dphi += mu * dz[i] / (ub[i] - cur.z[i]);
    }

    auto filter_ok = [&](double th, double ph) {
      if (th > theta_max) return false;
      for (const auto& [tf, pf] : filter)
        if (th > (1.0 - kGammaTheta) * tf && ph > pf - kGammaPhi * tf) return false;
      return true;
    };

    bool accepted = false;
    bool f_type_step = false;
    double alpha = a_pri;
    Eigen::VectorXd s_trial(mI);
    const double alpha_min = 1e-12;
    int ls_iter = 0;
    while (alpha >= alpha_min) {
      trial.z = cur.z + alpha * dz;
      s_trial = cur.s + alpha * ds;
      eval_point(trial.z, ws.trial_values, trial);
      ++ls_iter;
      if (trial.valid) {
        trial.s = s_trial;
        trial.theta = theta_of(trial);
        const double phi_t = trial.barrier(mu, lb, ub);
        const bool switching = dphi < 0.0 && alpha * std::pow(-dphi, kSPhi) >
                                                 kDeltaSwitch * std::pow(cur.theta, kSTheta);
        const bool armijo = phi_t <= phi0 + kEtaPhi * alpha * dphi;
        const bool suff_decrease = trial.theta <= (1.0 - kGammaTheta) * cur.theta ||
                                   phi_t <= phi0 - kGammaPhi * cur.theta;
        if (filter_ok(trial.theta, phi_t)) {
          if (cur.theta <= theta_min && switching) {
            if (armijo) {
              accepted = true;
              f_type_step = true;
              break;
            }
          } else if (suff_decrease) {
            accepted = true;
            break;
          }
        }
      }
      alpha *= 0.5;
      if (ls_iter > 60) break;
    }

    if (!accepted) {
      // feasibility restoration (light): damped Gauss-Newton on the violated
      // constraints, slacks re-fit afterwards
      ++restoration_count;
      if (restoration_count > 8) {
        fill_solution(cur.theta > std::sqrt(opts.tol) ? SolveStatus::infeasible
                                                      : SolveStatus::max_iter);
        return out;
      }
      const double theta_enter = cur.theta;
      bool improved = false;
      for (int rit = 0; rit < 25 && iter + rit < opts.max_iter; ++rit) {
        eval_first_derivs();
        Eigen::MatrixXd A(mE + mI, n);
        Eigen::VectorXd b(mE + mI);
        A.setZero();
        int rows = 0;
        for (int r = 0; r < mE; ++r, ++rows) {
          for (std::size_t k = 0; k < im.eq_pieces[r].var_slots.size(); ++k)
            A(rows, im.eq_pieces[r].var_slots[k]) = JE[r][k];
          b[rows] = cur.cE[r];
        }
        for (int r = 0; r < mI; ++r) {
          if (cur.cI[r] + cur.s[r] <= 0.0) continue;
          for (std::size_t k = 0; k < im.ineq_pieces[r].var_slots.size(); ++k)
            A(rows, im.ineq_pieces[r].var_slots[k]) = JI[r][k];
          b[rows] = cur.cI[r] + cur.s[r];
          ++rows;
        }
        if (rows == 0) break;
        Eigen::MatrixXd AtA = A.topRows(rows).transpose() * A.topRows(rows);
        AtA.diagonal().array() += 1e-8 * std::max(1.0, AtA.diagonal().maxCoeff());
        const Eigen::VectorXd dzr = AtA.ldlt().solve(-A.topRows(rows).transpose() * b.head(rows));

        double ar = 1.0;
        for (int i = 0; i < n; ++i) {
          if (lb[i] > -kInf && dzr[i] < 0.0) ar = std::min(ar, -tau * (cur.z[i] - lb[i]) / dzr[i]);
          if (ub[i] < kInf && dzr[i] > 0.0) ar = std::min(ar, tau * (ub[i] - cur.z[i]) / dzr[i]);
        }
        bool step_ok = false;
        for (; ar > 1e-10; ar *= 0.5) {
          eval_point(cur.z + ar * dzr, ws.trial_values, trial);
          if (!trial.valid) continue;
          trial.s = cur.s;
          for (int i = 0; i < mI; ++i)
            trial.s[i] = std::max({1e-10, trial.s[i], -trial.cI[i]});
          trial.theta = theta_of(trial);
          if (trial.theta < cur.theta * (1.0 - 1e-4) || trial.theta < opts.tol) {
            cur = trial;
            std::swap(ws.tape_values, ws.trial_values);
            step_ok = true;
            break;
          }
        }
        if (!step_ok) break;
        if (cur.theta < 0.1 * theta_enter || cur.theta < opts.tol) {
          improved = true;
          break;
        }
      }
      iter += 1;
      if (!improved && cur.theta >= theta_enter) {
        fill_solution(cur.theta > std::sqrt(opts.tol) ? SolveStatus::infeasible
                                                      : SolveStatus::max_iter);
        return out;
      }
      // reset duals and filter after restoration
      for (int i = 0; i < mI; ++i) yI[i] = std::max(mu / cur.s[i], 1e-8);
      for (int i = 0; i < n; ++i) {
        if (lb[i] > -kInf) zL[i] = mu / (cur.z[i] - lb[i]);
        if (ub[i] < kInf) zU[i] = mu / (ub[i] - cur.z[i]);
      }
      filter.clear();
      continue;
    }

    // filter augmentation for steps that are not f-type
    if (!f_type_step)
      filter.emplace_back((1.0 - kGammaTheta) * cur.theta, phi0 - kGammaPhi * cur.theta);

    cur = trial;
    std::swap(ws.tape_values, ws.trial_values);
    yE += alpha * dyE;
    yI += a_dual * dyI;
    zL += a_dual * dzL;
    zU += a_dual * dzU;
    restoration_count = 0;
    ++iter;
  }
}

NlpSolution solve_nlp(const NlpProblem& problem, const Eigen::VectorXd& params,
                      const Eigen::VectorXd& initial_guess, const SolverOptions& opts,
                      const NlpSolution* warm_start) {
  IpSolver solver(problem);
  return solver.solve(params, initial_guess, opts, warm_start);
}

}  // namespace ramplab::nlp
