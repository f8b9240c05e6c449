#pragma once

#include <cstdint>
#include <vector>

#include "ramplab/traffic/metanet.hpp"
#include "ramplab/traffic/types.hpp"

namespace ramplab::scenario {

/// Piecewise-linear nominal profile with per-node randomization: the node
/// value gets truncated-at-zero Gaussian noise and the node time a Gaussian
/// timing jitter (endpoints stay put).
struct ProfileConfig {
  std::vector<double> node_times_h;
  std::vector<double> node_values;
  std::vector<double> node_value_std;
  double time_jitter_std_h = 2.0 / 60.0;

  void validate(double horizon_h) const;
};

struct ScenarioConfig {
  double horizon_h = 4.0;
  ProfileConfig demand_o1;
  ProfileConfig demand_o2;
  ProfileConfig congestion_d1;
  int smoothing_window = 1;  // moving-average width in samples; 1 = off

  void validate() const;

  /// Two-peak rush-hour profiles: O1 1000->3000 veh/h, O2 150->1500 veh/h,
  /// destination congestion 20->60 veh/km/lane trailing the demand peaks by
  /// 10 minutes. Each demand ramp-up takes 20 minutes.
  static ScenarioConfig benchmark();
};

/// Per-process-step series for every disturbance channel of one episode.
struct ScenarioRealization {
  std::vector<double> demand_o1;
  std::vector<double> demand_o2;
  std::vector<double> congestion_d1;

  int num_steps() const { return static_cast<int>(demand_o1.size()); }
  traffic::Disturbance at(int k) const;
};

ScenarioRealization generate_scenario(const ScenarioConfig& cfg, const traffic::MetanetParams& p,
                                      std::uint64_t seed);

struct SteadyStateResult {
  traffic::TrafficState state;
  double ramp_flow;  // applied O2 flow at the last warm-up step
  bool converged = true;
  double residual = 0.0;
};

/// Warm-up from free flow under the episode's initial demands with every ramp
/// running at its physical bound; 30 simulated minutes, convergence checked
/// on the final step.
SteadyStateResult steady_state_init(const ScenarioRealization& scn,
                                    const traffic::NetworkTopology& topo,
                                    const traffic::MetanetParams& p);

}  // namespace ramplab::scenario
