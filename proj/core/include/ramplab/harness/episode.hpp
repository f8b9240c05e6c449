#pragma once

#include <memory>
#include <random>

#include "ramplab/baselines/pi_alinea.hpp"
#include "ramplab/harness/config.hpp"
#include "ramplab/mpc/approximator.hpp"
#include "ramplab/rl/qlearning.hpp"
#include "ramplab/scenario/scenario.hpp"

namespace ramplab::harness {

/// Per-episode accounting: the three cost contributions both raw and
/// weighted, queue extremes, the learning residual, and (optionally) the
/// full per-step traces used by the figure exports.
struct EpisodeMetrics {
  int episode = 0;
  double tts_raw = 0.0, var_raw = 0.0, viol_raw = 0.0;
  double tts_cost = 0.0, var_cost = 0.0, viol_cost = 0.0, total_cost = 0.0;
  double max_queue = 0.0;
  int violating_steps = 0;
  double mean_abs_td = 0.0;
  int degraded_solves = 0;
  bool failed = false;
  double wall_time_s = 0.0;  // in-memory only; never serialized

  bool has_traces = false;
  Eigen::MatrixXd trace_rho, trace_v, trace_flow;  // steps x segments
  Eigen::MatrixXd trace_w;                         // steps x origins
  Eigen::VectorXd trace_r;                         // applied ramp command per step
  Eigen::MatrixXd trace_disturbance;               // steps x (origins + destinations)
};

/// A metering policy evaluated once per control period.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void begin_episode(const traffic::TrafficState& x0, double initial_flow) = 0;
  /// Returns the flow command for the next M process steps.
  virtual double decide(const traffic::TrafficState& x, const traffic::Disturbance& d) = 0;
  virtual bool last_decide_degraded() const { return false; }
};

/// Fixed-gain PI-ALINEA with the queue-management override, measuring the
/// merge-segment density.
class PiAlineaController : public Controller {
 public:
  PiAlineaController(const ExperimentConfig& cfg);
  void begin_episode(const traffic::TrafficState& x0, double initial_flow) override;
  double decide(const traffic::TrafficState& x, const traffic::Disturbance& d) override;

 private:
  baselines::PiAlineaGains gains_;
  int merge_segment_;
  int ramp_origin_;
  double capacity_;
  double w_max_;
  double t_ctrl_h_;
  double r_prev_ = 0.0;
  double rho_prev_ = 0.0;
};

/// The parametric MPC policy; exploration perturbs the first move through the
/// objective when an exploration rng is armed.
class MpcController : public Controller {
 public:
  MpcController(const ExperimentConfig& cfg, mpc::ThetaVector theta);

  void begin_episode(const traffic::TrafficState& x0, double initial_flow) override;
  double decide(const traffic::TrafficState& x, const traffic::Disturbance& d) override;
  bool last_decide_degraded() const override { return last_value_.degraded; }

  void arm_exploration(std::mt19937_64* rng, const rl::LearnerSchedules* schedules) {
    explore_rng_ = rng;
    schedules_ = schedules;
  }
  void set_theta(const mpc::ThetaVector& t) { theta_ = t; }
  const mpc::ThetaVector& theta() const { return theta_; }
  mpc::MpcApproximator& approximator() { return mpc_; }
  const mpc::MpcEvalResult& last_value_result() const { return last_value_; }
  void note_applied(double r) { mpc_.set_previous_action(r); }

 private:
  mpc::MpcApproximator mpc_;
  mpc::ThetaVector theta_;
  std::mt19937_64* explore_rng_ = nullptr;
  const rl::LearnerSchedules* schedules_ = nullptr;
  mpc::MpcEvalResult last_value_;
};

struct EpisodeOptions {
  bool record_transitions = false;
  bool retain_traces = false;
  int episode_index = 0;
  double gamma = 0.98;
  int td_discount_exponent = 1;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<rl::Transition> transitions;
  // stage cost of the final control period, whose transition has no next
  // value to pair with and is therefore not recorded
  double tail_cost = 0.0;
};

/// Simulate one full episode: steady-state reset, one control decision per M
/// process steps, stage costs accumulated per process step, transitions
/// recorded at the controller timescale when requested.
EpisodeResult run_episode(const ExperimentConfig& cfg, Controller& controller,
                          const scenario::ScenarioRealization& scn, const EpisodeOptions& opts);

}  // namespace ramplab::harness
