#include "ramplab/mpc/approximator.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ramplab::mpc {

using ad::Expr;
using ad::lit;
using nlp::NlpProblem;
using nlp::NlpSolution;
using nlp::SolveStatus;

FixedMpcConstants FixedMpcConstants::mismatched(const traffic::MetanetParams& p,
                                                double rho_crit_factor, double a_factor,
                                                double v_free_factor) {
  FixedMpcConstants c;
  c.rho_sp = rho_crit_factor * p.rho_crit;
  c.v_sp = v_free_factor * p.v_free;
  c.rho_max = p.rho_max;
  c.v_max = v_free_factor * p.v_free;
  c.w_max = p.w_max;
  c.v_free_fixed = v_free_factor * p.v_free;
  c.rho_crit_fixed = rho_crit_factor * p.rho_crit;
  c.a_fixed = a_factor * p.a;
  return c;
}

MpcApproximator::MpcApproximator(const traffic::NetworkTopology& topo,
                                 const traffic::MetanetParams& model_params,
                                 const HorizonConfig& horizon, const FixedMpcConstants& consts,
                                 const AblationFlags& flags, const nlp::SolverOptions& solver_opts)
    : topo_(topo),
      model_(model_params),
      horizon_(horizon),
      consts_(consts),
      flags_(flags),
      solver_opts_(solver_opts) {
  topo_.validate();
  model_.validate();
  horizon_.validate();
  for (int o = 0; o < topo_.num_origins(); ++o) {
    if (topo_.origins[o].kind == traffic::OriginKind::mainstream) {
      if (mainstream_origin_ >= 0)
        throw std::invalid_argument("mpc: exactly one mainstream origin supported");
      mainstream_origin_ = o;
    } else {
      if (ramp_origin_ >= 0) throw std::invalid_argument("mpc: exactly one metered ramp supported");
      ramp_origin_ = o;
    }
  }
  if (mainstream_origin_ < 0 || ramp_origin_ < 0)
    throw std::invalid_argument("mpc: topology needs one mainstream origin and one metered ramp");
  if (topo_.destinations.size() != 1 || topo_.destinations[0] != topo_.num_segments() - 1)
    throw std::invalid_argument("mpc: expected a single destination after the last segment");

  theta_dim_ =
      ThetaLayout::make(flags_, topo_.num_segments(), topo_.num_origins(), horizon_.Np).dim;
  build_problems();
}

namespace {

struct StepExprs {
  std::vector<Expr> rho, v;
  Expr w_main, w_ramp;
};

}  // namespace

void MpcApproximator::build_problems() {
  const int nS = topo_.num_segments();
  const int nO = topo_.num_origins();
  const int nx = 2 * nS + nO;
  const int Np = horizon_.Np;
  const int Nc = horizon_.Nc;
  const double C_ramp = topo_.origins[ramp_origin_].capacity;
  const ThetaLayout layout = ThetaLayout::make(flags_, nS, nO, Np);

  auto build = [&](bool pin_action) {
    auto P = std::make_unique<NlpProblem>();

    // decision variables: states for every predicted step, then the control
    // moves, then the queue-constraint slacks
    // Only densities carry a lower bound: the exponent in the equilibrium
    // speed needs a strictly positive base, and the barrier keeps it there.
    // Speeds and queues are left free; the dynamics and the flow constraints
    // keep them in range without a second barrier to fight.
    std::vector<StepExprs> xs(Np + 1);
    for (int i = 0; i <= Np; ++i) {
      const double lo = i == 0 ? -std::numeric_limits<double>::infinity() : 0.0;
      xs[i].rho.reserve(nS);
      xs[i].v.reserve(nS);
      for (int j = 0; j < nS; ++j) xs[i].rho.push_back(P->new_variable(lo));
      for (int j = 0; j < nS; ++j) xs[i].v.push_back(P->new_variable());
      for (int o = 0; o < nO; ++o) {
        const Expr w = P->new_variable();
        if (o == mainstream_origin_)
          xs[i].w_main = w;
        else
          xs[i].w_ramp = w;
      }
    }
    std::vector<Expr> us;
    for (int j = 0; j < Nc; ++j) us.push_back(P->new_variable(0.0, C_ramp));
    std::vector<Expr> sigmas;
    for (int i = 0; i <= Np; ++i) sigmas.push_back(P->new_variable(0.0));

    // parameters: x0, demands, frozen mainstream inflow, frozen downstream
    // density, previous applied flow, exploration weight, theta, [pinned u]
    std::vector<Expr> x0;
    for (int c = 0; c < nx; ++c) x0.push_back(P->new_parameter());
    std::vector<Expr> dem;
    for (int o = 0; o < nO; ++o) dem.push_back(P->new_parameter());
    const Expr q_o1 = P->new_parameter();
    const Expr rho_down = P->new_parameter();
    const Expr u_prev = P->new_parameter();
    const Expr q_pert = P->new_parameter();
    std::vector<Expr> th;
    for (int k = 0; k < layout.dim; ++k) th.push_back(P->new_parameter());
    Expr u_pin;
    if (pin_action) u_pin = P->new_parameter();

    const Expr rho_crit =
        layout.rho_crit >= 0 ? th[layout.rho_crit] : lit(P->graph, consts_.rho_crit_fixed);
    const Expr a_exp = layout.a >= 0 ? th[layout.a] : lit(P->graph, consts_.a_fixed);
    const Expr v_free =
        layout.v_free >= 0 ? th[layout.v_free] : lit(P->graph, consts_.v_free_fixed);

    // initial-state pin
    for (int j = 0; j < nS; ++j) P->add_equality(xs[0].rho[j] - x0[j]);
    for (int j = 0; j < nS; ++j) P->add_equality(xs[0].v[j] - x0[nS + j]);
    for (int o = 0; o < nO; ++o) {
      const Expr w = o == mainstream_origin_ ? xs[0].w_main : xs[0].w_ramp;
      P->add_equality(w - x0[2 * nS + o]);
    }

    const double T = model_.T, tau = model_.tau, eta = model_.eta, kappa = model_.kappa,
                 mu_merge = model_.mu, rho_max = model_.rho_max;

    // prediction dynamics
    for (int i = 0; i < Np; ++i) {
      const Expr r = us[horizon_.control_index(i)];
      std::vector<Expr> q(nS);
      for (int j = 0; j < nS; ++j)
        q[j] = topo_.segments[j].lanes * xs[i].rho[j] * xs[i].v[j];

      for (int j = 0; j < nS; ++j) {
        const double L = topo_.segments[j].length_km;
        const double lam = topo_.segments[j].lanes;
        Expr inflow = j == 0 ? q_o1 : q[j - 1];
        Expr rho_next = xs[i].rho[j] + (T / (L * lam)) * (inflow - q[j]);
        if (j == topo_.origins[ramp_origin_].entry_segment)
          rho_next = rho_next + (T / (L * lam)) * r;
        P->add_equality(xs[i + 1].rho[j] - rho_next);
      }

      for (int j = 0; j < nS; ++j) {
        const double L = topo_.segments[j].length_km;
        const double lam = topo_.segments[j].lanes;
        const Expr ve = v_free * exp(-(1.0 / a_exp) * pow(xs[i].rho[j] / rho_crit, a_exp));
        Expr v_next = xs[i].v[j] + (T / tau) * (ve - xs[i].v[j]);
        if (j > 0) v_next = v_next + (T / L) * xs[i].v[j] * (xs[i].v[j - 1] - xs[i].v[j]);
        const Expr down = j + 1 < nS ? xs[i].rho[j + 1] : rho_down;
        v_next = v_next -
                 (eta * T / (tau * L)) * (down - xs[i].rho[j]) / (xs[i].rho[j] + kappa);
        if (j == topo_.origins[ramp_origin_].entry_segment)
          v_next = v_next - (mu_merge * T) * r * xs[i].v[j] / (L * lam * (xs[i].rho[j] + kappa));
        P->add_equality(xs[i + 1].v[j] - v_next);
      }

      P->add_equality(xs[i + 1].w_main - (xs[i].w_main + T * (dem[mainstream_origin_] - q_o1)));
      P->add_equality(xs[i + 1].w_ramp - (xs[i].w_ramp + T * (dem[ramp_origin_] - r)));
    }

    // ramp-flow feasibility and soft queue constraints, one block per step;
    // rows are expressed in vehicle / dimensionless units so they are
    // comparably scaled to the dynamics rows
    const int j_ramp = topo_.origins[ramp_origin_].entry_segment;
    for (int i = 0; i <= Np; ++i) {
      const Expr r = us[horizon_.control_index(i)];
      P->add_inequality(T * (r - dem[ramp_origin_]) - xs[i].w_ramp);
      P->add_inequality(r / C_ramp - (rho_max - xs[i].rho[j_ramp]) / (rho_max - rho_crit));
      P->add_inequality(xs[i].w_ramp - consts_.w_max - sigmas[i]);
    }

    // objective
    std::vector<double> gpow(Np + 1);
    for (int i = 0; i <= Np; ++i) gpow[i] = std::pow(horizon_.gamma, i);

    for (int i = 0; i <= Np; ++i) {
      Expr tts = xs[i].w_main + xs[i].w_ramp;
      for (int j = 0; j < nS; ++j)
        tts = tts + topo_.segments[j].length_km * topo_.segments[j].lanes * xs[i].rho[j];
      P->add_objective_term(gpow[i] * th[layout.theta_T] * (T * tts));
    }
    for (int i = 0; i <= Np; ++i)
      P->add_objective_term(gpow[i] * th[layout.Theta_C + i] * sigmas[i]);
    for (int j = 0; j < Nc; ++j) {
      const Expr prev = j == 0 ? u_prev : us[j - 1];
      const Expr dv = (us[j] - prev) / C_ramp;
      P->add_objective_term(std::pow(horizon_.gamma, j * horizon_.M) * th[layout.theta_V] *
                            square(dv));
    }

    const Expr rho_sp = flags_.setpoints_track_learned ? rho_crit : lit(P->graph, consts_.rho_sp);
    const Expr v_sp = flags_.setpoints_track_learned ? v_free : lit(P->graph, consts_.v_sp);

    {
      Expr lam_cost = lit(P->graph, 0.0);
      for (int j = 0; j < nS; ++j)
        lam_cost = lam_cost + th[layout.lam_rho + j] * (xs[0].rho[j] / consts_.rho_max) +
                   th[layout.lam_v + j] * (xs[0].v[j] / consts_.v_max);
      lam_cost = lam_cost + th[layout.lam_w + mainstream_origin_] * (xs[0].w_main / consts_.w_max) +
                 th[layout.lam_w + ramp_origin_] * (xs[0].w_ramp / consts_.w_max);
      P->add_objective_term(lam_cost);
    }

    auto quad_cost = [&](const StepExprs& s, int rho_off, int v_off, int w_off) {
      Expr acc = lit(P->graph, 0.0);
      for (int j = 0; j < nS; ++j)
        acc = acc + th[rho_off + j] * square((s.rho[j] - rho_sp) / consts_.rho_max) +
              th[v_off + j] * square((s.v[j] - v_sp) / consts_.v_max);
      acc = acc + th[w_off + mainstream_origin_] * square(s.w_main / consts_.w_max) +
            th[w_off + ramp_origin_] * square(s.w_ramp / consts_.w_max);
      return acc;
    };
    for (int i = 1; i < Np; ++i)
      P->add_objective_term(gpow[i] *
                            quad_cost(xs[i], layout.ell_rho, layout.ell_v, layout.ell_w));
    P->add_objective_term(gpow[Np] *
                          quad_cost(xs[Np], layout.gam_rho, layout.gam_v, layout.gam_w));
    P->add_objective_term(q_pert * (us[0] / C_ramp));

    if (pin_action) P->add_equality(us[0] - u_pin);

    P->finalize();
    return P;
  };

  v_problem_ = build(false);
  q_problem_ = build(true);
  v_solver_ = std::make_unique<nlp::IpSolver>(*v_problem_);
  q_solver_ = std::make_unique<nlp::IpSolver>(*q_problem_);
}

Eigen::VectorXd MpcApproximator::pack_value_params(const traffic::TrafficState& x,
                                                   const traffic::Disturbance& d,
                                                   const ThetaVector& theta,
                                                   double perturbation) const {
  if (theta.dim() != theta_dim_) throw std::invalid_argument("mpc: theta dimension mismatch");
  const int nS = topo_.num_segments();
  const int nO = topo_.num_origins();
  const int nx = 2 * nS + nO;
  Eigen::VectorXd p(nx + nO + 4 + theta_dim_);
  int at = 0;
  p.segment(at, nS) = x.rho;
  at += nS;
  p.segment(at, nS) = x.v;
  at += nS;
  p.segment(at, nO) = x.w;
  at += nO;
  p.segment(at, nO) = d.demand;
  at += nO;

  // frozen mainstream inflow and downstream boundary density: computed with
  // the theta-free believed critical density so the Lagrangian sensitivities
  // stay exact
  const int o1 = mainstream_origin_;
  const double rho_entry = x.rho[topo_.origins[o1].entry_segment];
  const double cap = topo_.origins[o1].capacity;
  const double density_term = std::max(
      0.0, cap * (model_.rho_max - rho_entry) / (model_.rho_max - consts_.rho_crit_fixed));
  p[at++] = std::max(
      0.0, std::min({d.demand[o1] + x.w[o1] / model_.T, cap, density_term}));
  p[at++] = std::max(std::min(x.rho[nS - 1], consts_.rho_crit_fixed), d.congestion_density[0]);
  p[at++] = u_prev_;
  p[at++] = perturbation;
  p.segment(at, theta_dim_) = theta.value;
  return p;
}

namespace {

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

Eigen::VectorXd MpcApproximator::cold_start_guess(const traffic::TrafficState& x,
                                                  const Eigen::VectorXd& params) const {
  const int nS = topo_.num_segments();
  const int nO = topo_.num_origins();
  const int nx = 2 * nS + nO;
  const int Np = horizon_.Np;
  const int Nc = horizon_.Nc;
  const int n_vars = nx * (Np + 1) + Nc + (Np + 1);
  const double C_ramp = topo_.origins[ramp_origin_].capacity;

  const double q_o1 = params[nx + nO];
  const double rho_down = params[nx + nO + 1];
  const double u_prev = params[nx + nO + 2];
  const int th0 = nx + nO + 4;
  const ThetaLayout layout = ThetaLayout::make(flags_, nS, nO, Np);
  const double rho_crit =
      layout.rho_crit >= 0 ? params[th0 + layout.rho_crit] : consts_.rho_crit_fixed;
  const double a_exp = layout.a >= 0 ? params[th0 + layout.a] : consts_.a_fixed;
  const double v_free = layout.v_free >= 0 ? params[th0 + layout.v_free] : consts_.v_free_fixed;

  Eigen::VectorXd z(n_vars);
  const double r = clampd(u_prev, 1e-3, C_ramp - 1e-3);

  Eigen::VectorXd rho = x.rho, v = x.v, w = x.w;
  const int j_ramp = topo_.origins[ramp_origin_].entry_segment;
  for (int i = 0; i <= Np; ++i) {
    for (int j = 0; j < nS; ++j) z[i * nx + j] = rho[j];
    for (int j = 0; j < nS; ++j) z[i * nx + nS + j] = v[j];
    for (int o = 0; o < nO; ++o) z[i * nx + 2 * nS + o] = w[o];
    if (i == Np) break;

    // one prediction-model step under the held previous action
    Eigen::VectorXd rho_n = rho, v_n = v, w_n = w;
    std::vector<double> q(nS);
    for (int j = 0; j < nS; ++j) q[j] = topo_.segments[j].lanes * rho[j] * v[j];
    for (int j = 0; j < nS; ++j) {
      const double L = topo_.segments[j].length_km, lam = topo_.segments[j].lanes;
      const double inflow = (j == 0 ? q_o1 : q[j - 1]) + (j == j_ramp ? r : 0.0);
      rho_n[j] = std::max(1e-6, rho[j] + model_.T / (L * lam) * (inflow - q[j]));
      const double ve = v_free * std::exp(-(1.0 / a_exp) * std::pow(rho[j] / rho_crit, a_exp));
      double vn = v[j] + model_.T / model_.tau * (ve - v[j]);
      if (j > 0) vn += model_.T / L * v[j] * (v[j - 1] - v[j]);
      const double down = j + 1 < nS ? rho[j + 1] : rho_down;
      vn -= model_.eta * model_.T / (model_.tau * L) * (down - rho[j]) / (rho[j] + model_.kappa);
      if (j == j_ramp) vn -= model_.mu * model_.T * r * v[j] / (L * lam * (rho[j] + model_.kappa));
      v_n[j] = std::max(1e-6, vn);
    }
    w_n[mainstream_origin_] = w[mainstream_origin_] + model_.T * (params[nx + mainstream_origin_] - q_o1);
    w_n[ramp_origin_] =
        std::max(0.0, w[ramp_origin_] + model_.T * (params[nx + ramp_origin_] - r));
    rho = rho_n;
    v = v_n;
    w = w_n;
  }

  for (int j = 0; j < Nc; ++j) z[nx * (Np + 1) + j] = r;
  for (int i = 0; i <= Np; ++i) {
    const double wr = z[i * nx + 2 * nS + ramp_origin_];
    // roomy slack guess: a tight soft constraint at the start cripples the
    // first barrier steps
    z[nx * (Np + 1) + Nc + i] = std::max(0.0, wr - consts_.w_max) + 1.0;
  }
  return z;
}

NlpSolution MpcApproximator::shifted_warm_start(const NlpSolution& prev) const {
  const int nS = topo_.num_segments();
  const int nO = topo_.num_origins();
  const int nx = 2 * nS + nO;
  const int Np = horizon_.Np;
  const int Nc = horizon_.Nc;
  const int M = horizon_.M;
  const int n_states = nx * (Np + 1);

  NlpSolution ws = prev;
  auto shift_vars = [&](Eigen::VectorXd& v) {
    if (v.size() < n_states + Nc + Np + 1) return;
    Eigen::VectorXd out = v;
    for (int i = 0; i <= Np; ++i) {
      const int src = std::min(i + M, Np);
      out.segment(i * nx, nx) = v.segment(src * nx, nx);
    }
    for (int j = 0; j < Nc; ++j) out[n_states + j] = v[n_states + std::min(j + 1, Nc - 1)];
    for (int i = 0; i <= Np; ++i)
      out[n_states + Nc + i] = v[n_states + Nc + std::min(i + M, Np)];
    v = out;
  };
  shift_vars(ws.primal);
  shift_vars(ws.bound_dual_lower);
  shift_vars(ws.bound_dual_upper);

  // equality multipliers: [x0 pin (nx)] then Np blocks of nx dynamics rows
  if (ws.eq_multipliers.size() >= nx + Np * nx) {
    Eigen::VectorXd out = ws.eq_multipliers;
    for (int i = 0; i < Np; ++i) {
      const int src = std::min(i + M, Np - 1);
      out.segment(nx + i * nx, nx) = ws.eq_multipliers.segment(nx + src * nx, nx);
    }
    ws.eq_multipliers = out;
  }
  // inequality rows come in blocks of 3 per step: h3, h4, g
  auto shift_ineq = [&](Eigen::VectorXd& v) {
    if (v.size() != 3 * (Np + 1)) return;
    Eigen::VectorXd out = v;
    for (int i = 0; i <= Np; ++i) {
      const int src = std::min(i + M, Np);
      out.segment(3 * i, 3) = v.segment(3 * src, 3);
    }
    v = out;
  };
  shift_ineq(ws.ineq_multipliers);
  shift_ineq(ws.ineq_slacks);
  ws.barrier_mu = 1e-4;
  return ws;
}

void MpcApproximator::reset(double previous_action) {
  u_prev_ = previous_action;
  last_v_solution_.reset();
  last_q_solution_.reset();
}

MpcEvalResult MpcApproximator::eval_value(const traffic::TrafficState& x,
                                          const traffic::Disturbance& d, const ThetaVector& theta,
                                          double perturbation) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::VectorXd params = pack_value_params(x, d, theta, perturbation);

  NlpSolution sol;
  if (last_v_solution_) {
    const NlpSolution ws = shifted_warm_start(*last_v_solution_);
    sol = v_solver_->solve(v_ws_, params, ws.primal, solver_opts_, &ws);
  } else {
    sol = v_solver_->solve(v_ws_, params, cold_start_guess(x, params), solver_opts_);
  }
  if (sol.status != SolveStatus::optimal) {
    const NlpSolution retry =
        v_solver_->solve(v_ws_, params, cold_start_guess(x, params), solver_opts_);
    if (retry.status == SolveStatus::optimal || retry.kkt_residual() < sol.kkt_residual())
      sol = retry;
  }

  MpcEvalResult res;
  res.params = params;
  res.solution = sol;
  res.status = sol.status;
  res.value = sol.objective;
  const int first_action_idx = (2 * topo_.num_segments() + topo_.num_origins()) * (horizon_.Np + 1);
  if (sol.status == SolveStatus::optimal) {
    res.first_action = sol.primal[first_action_idx];
    last_v_solution_ = sol;
  } else {
    res.first_action = u_prev_;
    res.degraded = true;
  }
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

MpcEvalResult MpcApproximator::eval_action_value(const traffic::TrafficState& x,
                                                 const traffic::Disturbance& d, double u,
                                                 const ThetaVector& theta) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::VectorXd vparams = pack_value_params(x, d, theta, 0.0);
  Eigen::VectorXd params(vparams.size() + 1);
  params << vparams, u;

  // prefer warm-starting from the value solve of the same state
  NlpSolution sol;
  bool warm_done = false;
  if (last_v_solution_) {
    NlpSolution ws = *last_v_solution_;
    ws.eq_multipliers.conservativeResize(ws.eq_multipliers.size() + 1);
    ws.eq_multipliers[ws.eq_multipliers.size() - 1] = 0.0;
    sol = q_solver_->solve(q_ws_, params, ws.primal, solver_opts_, &ws);
    warm_done = true;
  }
  if (!warm_done || sol.status != SolveStatus::optimal) {
    const NlpSolution retry =
        q_solver_->solve(q_ws_, params, cold_start_guess(x, params), solver_opts_);
    if (!warm_done || retry.status == SolveStatus::optimal ||
        retry.kkt_residual() < sol.kkt_residual())
      sol = retry;
  }

  MpcEvalResult res;
  res.params = params;
  res.solution = sol;
  res.status = sol.status;
  res.value = sol.objective;
  res.first_action = u;
  if (sol.status == SolveStatus::optimal)
    last_q_solution_ = sol;
  else
    res.degraded = true;
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

Eigen::VectorXd MpcApproximator::theta_gradient_of_Q(const MpcEvalResult& result,
                                                     const ThetaVector& theta) const {
  if (result.degraded || result.status != SolveStatus::optimal)
    throw std::logic_error("theta_gradient_of_Q: gradient undefined for a degraded evaluation");
  const bool is_q = result.params.size() == q_problem_->num_params();
  const NlpProblem& prob = is_q ? *q_problem_ : *v_problem_;
  const Eigen::VectorXd full =
      nlp::parametric_value_gradient(prob, result.solution, result.params);
  const int nx = 2 * topo_.num_segments() + topo_.num_origins();
  const int theta_at = nx + topo_.num_origins() + 4;
  (void)theta;
  return full.segment(theta_at, theta_dim_);
}

Eigen::MatrixXd MpcApproximator::theta_hessian_of_Q(const MpcEvalResult& result,
                                                    const ThetaVector& theta, HessianMode mode) {
  if (mode == HessianMode::gauss_newton) return Eigen::MatrixXd();
  if (result.degraded || result.status != SolveStatus::optimal)
    throw std::logic_error("theta_hessian_of_Q: hessian undefined for a degraded evaluation");
  if (result.params.size() != q_problem_->num_params())
    throw std::logic_error("theta_hessian_of_Q: result did not come from eval_action_value");

  const int nx = 2 * topo_.num_segments() + topo_.num_origins();
  const int theta_at = nx + topo_.num_origins() + 4;
  const int n = theta_dim_;
  Eigen::MatrixXd H(n, n);
  nlp::IpWorkspace ws;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-4 * std::max(1.0, std::abs(theta.value[j]));
    Eigen::VectorXd pp = result.params, pm = result.params;
    pp[theta_at + j] += h;
    pm[theta_at + j] -= h;
    const NlpSolution sp =
        q_solver_->solve(ws, pp, result.solution.primal, solver_opts_, &result.solution);
    const NlpSolution sm =
        q_solver_->solve(ws, pm, result.solution.primal, solver_opts_, &result.solution);
    if (sp.status != SolveStatus::optimal || sm.status != SolveStatus::optimal)
      throw std::runtime_error("theta_hessian_of_Q: finite-difference re-solve failed");
    const Eigen::VectorXd gp =
        nlp::parametric_value_gradient(*q_problem_, sp, pp).segment(theta_at, n);
    const Eigen::VectorXd gm =
        nlp::parametric_value_gradient(*q_problem_, sm, pm).segment(theta_at, n);
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace ramplab::mpc
