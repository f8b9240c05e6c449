#include "ramplab/harness/episode.hpp"

#include <chrono>
#include <cmath>

namespace ramplab::harness {

PiAlineaController::PiAlineaController(const ExperimentConfig& cfg)
    : gains_(cfg.pi_gains), w_max_(cfg.true_params.w_max) {
  ramp_origin_ = -1;
  for (int o = 0; o < cfg.topology.num_origins(); ++o)
    if (cfg.topology.origins[o].kind == traffic::OriginKind::on_ramp) ramp_origin_ = o;
  if (ramp_origin_ < 0) throw ConfigError("pi-alinea needs a metered on-ramp");
  merge_segment_ = cfg.topology.origins[ramp_origin_].entry_segment;
  capacity_ = cfg.topology.origins[ramp_origin_].capacity;
  t_ctrl_h_ = cfg.horizon.M * cfg.true_params.T;
}

void PiAlineaController::begin_episode(const traffic::TrafficState& x0, double initial_flow) {
  r_prev_ = initial_flow;
  rho_prev_ = x0.rho[merge_segment_];
}

double PiAlineaController::decide(const traffic::TrafficState& x, const traffic::Disturbance& d) {
  const double rho_now = x.rho[merge_segment_];
  const double r_pi = baselines::pi_alinea_action(rho_now, rho_prev_, r_prev_, gains_, capacity_);
  const double r = baselines::queue_override(r_pi, x.w[ramp_origin_], d.demand[ramp_origin_],
                                             w_max_, t_ctrl_h_, capacity_);
  rho_prev_ = rho_now;
  r_prev_ = r;
  return r;
}

MpcController::MpcController(const ExperimentConfig& cfg, mpc::ThetaVector theta)
    : mpc_(cfg.topology, cfg.true_params, cfg.horizon, cfg.mpc_constants(), cfg.flags, cfg.solver),
      theta_(std::move(theta)) {}

void MpcController::begin_episode(const traffic::TrafficState& x0, double initial_flow) {
  (void)x0;
  mpc_.reset(initial_flow);
}

double MpcController::decide(const traffic::TrafficState& x, const traffic::Disturbance& d) {
  double q = 0.0;
  if (explore_rng_ && schedules_) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double gate = u01(*explore_rng_);
    std::normal_distribution<double> gauss(0.0, schedules_->sigma_q);
    const double draw = gauss(*explore_rng_);
    if (gate < schedules_->epsilon) q = draw;
  }
  last_value_ = mpc_.eval_value(x, d, theta_, q);
  return last_value_.first_action;
}

EpisodeResult run_episode(const ExperimentConfig& cfg, Controller& controller,
                          const scenario::ScenarioRealization& scn, const EpisodeOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const traffic::NetworkTopology& topo = cfg.topology;
  const traffic::MetanetParams& p = cfg.true_params;
  const int n_steps = cfg.steps_per_episode();
  const int M = cfg.horizon.M;
  const int n_controls = n_steps / M;
  const int nS = topo.num_segments();
  const int nO = topo.num_origins();

  int ramp_origin = -1;
  for (int o = 0; o < nO; ++o)
    if (topo.origins[o].kind == traffic::OriginKind::on_ramp) ramp_origin = o;
  const double ramp_capacity = ramp_origin >= 0 ? topo.origins[ramp_origin].capacity : 1.0;

  EpisodeResult out;
  EpisodeMetrics& m = out.metrics;
  m.episode = opts.episode_index;

  if (opts.retain_traces) {
    m.has_traces = true;
    m.trace_rho.resize(n_steps, nS);
    m.trace_v.resize(n_steps, nS);
    m.trace_flow.resize(n_steps, nS);
    m.trace_w.resize(n_steps, nO);
    m.trace_r.resize(n_steps);
    m.trace_disturbance.resize(n_steps, nO + static_cast<int>(topo.destinations.size()));
  }

  const scenario::SteadyStateResult init = scenario::steady_state_init(scn, topo, p);
  traffic::TrafficState x = init.state;
  double cmd_prev = init.ramp_flow;

  controller.begin_episode(x, cmd_prev);
  auto* mpc_ctrl = dynamic_cast<MpcController*>(&controller);
  const bool record = opts.record_transitions && mpc_ctrl != nullptr;

  rl::Transition pending;
  bool have_pending = false;
  double td_abs_sum = 0.0;
  int td_count = 0;

  auto snapshot_disturbance = [&](const traffic::Disturbance& d) {
    Eigen::VectorXd v(d.demand.size() + d.congestion_density.size());
    v << d.demand, d.congestion_density;
    return v;
  };

  try {
    for (int i = 0; i < n_controls; ++i) {
      const int k0 = i * M;
      const traffic::Disturbance d0 = scn.at(k0);

      const double cmd = controller.decide(x, d0);
      if (controller.last_decide_degraded()) ++m.degraded_solves;

      // the jerk term of the step where the new command takes effect
      if (i > 0) {
        const double jump = (cmd - cmd_prev) / ramp_capacity;
        m.var_raw += jump * jump;
        if (have_pending) pending.cost += cfg.weights.c_V * jump * jump;
      }

      if (record) {
        const mpc::MpcEvalResult& v_res = mpc_ctrl->last_value_result();
        if (have_pending) {
          pending.next_state = x.to_vector();
          pending.next_value = v_res.degraded ? 0.0 : v_res.value;
          if (v_res.degraded) pending.valid = false;
          if (pending.valid) {
            td_abs_sum += std::abs(pending.cost +
                                   std::pow(opts.gamma, opts.td_discount_exponent) *
                                       pending.next_value -
                                   pending.q_value);
            ++td_count;
          }
          out.transitions.push_back(std::move(pending));
          have_pending = false;
        }

        pending = rl::Transition{};
        pending.episode = opts.episode_index;
        pending.index = i;
        pending.state = x.to_vector();
        pending.action = cmd;
        pending.disturbance = snapshot_disturbance(d0);
        pending.cost = 0.0;
        pending.valid = !v_res.degraded;

        const mpc::MpcEvalResult q_res =
            mpc_ctrl->approximator().eval_action_value(x, d0, cmd, mpc_ctrl->theta());
        if (q_res.degraded) {
          pending.valid = false;
          ++m.degraded_solves;
        } else {
          pending.q_value = q_res.value;
          pending.q_gradient = mpc_ctrl->approximator().theta_gradient_of_Q(q_res, mpc_ctrl->theta());
          if (cfg.learner.second_order_term)
            pending.q_hessian = mpc_ctrl->approximator().theta_hessian_of_Q(
                q_res, mpc_ctrl->theta(), mpc::HessianMode::finite_difference);
        }
        have_pending = true;
      }

      if (mpc_ctrl) mpc_ctrl->note_applied(cmd);

      for (int s = 0; s < M; ++s) {
        const int k = k0 + s;
        const traffic::Disturbance dk = scn.at(k);
        const traffic::StepResult sr =
            traffic::step_detailed(x, traffic::ControlInput::scalar(cmd), dk, topo, p);
        x = sr.state;

        // stage cost of step k+1 (the variability part is handled at the
        // period boundaries above)
        double tts = 0.0;
        for (int j = 0; j < nS; ++j)
          tts += topo.segments[j].length_km * topo.segments[j].lanes * x.rho[j];
        tts = p.T * (tts + x.w.sum());
        double viol = 0.0;
        for (int o : topo.constrained_origins) viol += std::max(0.0, x.w[o] - p.w_max);
        m.tts_raw += tts;
        m.viol_raw += viol;
        if (have_pending) pending.cost += cfg.weights.c_T * tts + cfg.weights.c_C * viol;

        for (int o : topo.constrained_origins) {
          m.max_queue = std::max(m.max_queue, x.w[o]);
          if (x.w[o] > p.w_max) {
            ++m.violating_steps;
            break;
          }
        }

        if (m.has_traces) {
          for (int j = 0; j < nS; ++j) {
            m.trace_rho(k, j) = x.rho[j];
            m.trace_v(k, j) = x.v[j];
            m.trace_flow(k, j) = sr.segment_flow[j];
          }
          for (int o = 0; o < nO; ++o) m.trace_w(k, o) = x.w[o];
          m.trace_r[k] = cmd;
          m.trace_disturbance.row(k) = snapshot_disturbance(dk);
        }
      }
      cmd_prev = cmd;
    }
  } catch (const traffic::SimulationDivergedError&) {
    m.failed = true;
    out.transitions.clear();
    have_pending = false;
  }
  if (have_pending) out.tail_cost = pending.cost;

  m.tts_cost = cfg.weights.c_T * m.tts_raw;
  m.var_cost = cfg.weights.c_V * m.var_raw;
  m.viol_cost = cfg.weights.c_C * m.viol_raw;
  m.total_cost = m.tts_cost + m.var_cost + m.viol_cost;
  m.mean_abs_td = td_count > 0 ? td_abs_sum / td_count : 0.0;
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace ramplab::harness
