#pragma once

#include "ramplab/traffic/types.hpp"

namespace ramplab::traffic {

/// V_e(rho) = v_free * exp(-(1/a) * (rho/rho_crit)^a). Overrides let the
/// controller evaluate the formula with its own (learned) exponent and
/// critical density.
double equilibrium_speed(double rho, const MetanetParams& p,
                         double a_override = -1.0, double rho_crit_override = -1.0,
                         double v_free_override = -1.0);

/// q = lanes * rho * v.
double segment_flow(double rho, double v, double lanes);

/// min{ d + w/T, C, C*(rho_max - rho_entry)/(rho_max - rho_crit) }, floored
/// at zero. This is the physical cap the simulator enforces on any requested
/// ramp flow; metering rate 1 corresponds to the bound itself.
double origin_flow_upper_bound(double w, double d, double rho_entry, double capacity,
                               const MetanetParams& p, bool* saturated = nullptr);

/// Downstream boundary density seen by the last segment:
/// max{ min{rho_last, rho_crit}, d_rho }.
double virtual_downstream_density(double rho_last, double d_rho, double rho_crit);

/// One process step plus the bookkeeping the harness needs: the flows that
/// were actually applied (after clipping to the physical bounds) and the
/// per-segment mainline flows.
struct StepResult {
  TrafficState state;
  Eigen::VectorXd applied_origin_flow;  // veh/h per origin
  Eigen::VectorXd segment_flow;         // veh/h per segment
  bool control_clipped = false;
};

StepResult step_detailed(const TrafficState& x, const ControlInput& u, const Disturbance& d,
                         const NetworkTopology& topo, const MetanetParams& p);

/// One METANET process step of duration T. Requested control flows are
/// clipped to the physical bound before application.
TrafficState step(const TrafficState& x, const ControlInput& u, const Disturbance& d,
                  const NetworkTopology& topo, const MetanetParams& p);

/// RL stage cost of one process step:
///   tts         = T * (sum_j L_j*lambda_j*rho_j + sum_o w_o)
///   variability = sum_ramps ((r - r_prev)/C)^2
///   violation   = sum_{o constrained} max{0, w_o - w_max}
StageCostBreakdown stage_cost(const TrafficState& x, const ControlInput& u,
                              const ControlInput& u_prev, const NetworkTopology& topo,
                              const MetanetParams& p, const StageCostWeights& weights);

}  // namespace ramplab::traffic
