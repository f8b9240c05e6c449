#include "ramplab/scenario/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ramplab::scenario {

void ProfileConfig::validate(double horizon_h) const {
  if (node_times_h.empty()) throw std::invalid_argument("scenario profile: empty node list");
  if (node_times_h.size() != node_values.size() || node_times_h.size() != node_value_std.size())
    throw std::invalid_argument("scenario profile: node arrays must have equal length");
  for (std::size_t i = 0; i < node_times_h.size(); ++i) {
    if (node_times_h[i] < 0.0 || node_times_h[i] > horizon_h)
      throw std::invalid_argument("scenario profile: node time outside the horizon");
    if (i > 0 && node_times_h[i] <= node_times_h[i - 1])
      throw std::invalid_argument("scenario profile: node times must be strictly increasing");
    if (node_values[i] < 0.0 || node_value_std[i] < 0.0)
      throw std::invalid_argument("scenario profile: node values and stds must be nonnegative");
  }
}

void ScenarioConfig::validate() const {
  if (horizon_h <= 0.0) throw std::invalid_argument("scenario: horizon must be positive");
  if (smoothing_window < 1) throw std::invalid_argument("scenario: smoothing window must be >= 1");
  demand_o1.validate(horizon_h);
  demand_o2.validate(horizon_h);
  congestion_d1.validate(horizon_h);
}

ScenarioConfig ScenarioConfig::benchmark() {
  const double ramp_up = 20.0 / 60.0;   // demand reaches its peak in 20 min
  const double delay = 10.0 / 60.0;     // congestion trails the demand peaks
  ScenarioConfig cfg;

  cfg.demand_o1.node_times_h = {0.0, 0.25, 0.25 + ramp_up, 11.0 / 12.0, 1.25,
                                2.0, 2.0 + ramp_up, 8.0 / 3.0, 3.0, 4.0};
  cfg.demand_o1.node_values = {1000, 1000, 3000, 3000, 1000, 1000, 3000, 3000, 1000, 1000};
  cfg.demand_o1.node_value_std.assign(10, 100.0);

  cfg.demand_o2.node_times_h = cfg.demand_o1.node_times_h;
  cfg.demand_o2.node_values = {150, 150, 1500, 1500, 150, 150, 1500, 1500, 150, 150};
  cfg.demand_o2.node_value_std.assign(10, 50.0);

  cfg.congestion_d1.node_times_h = cfg.demand_o1.node_times_h;
  for (std::size_t i = 1; i + 1 < cfg.congestion_d1.node_times_h.size(); ++i)
    cfg.congestion_d1.node_times_h[i] += delay;
  cfg.congestion_d1.node_values = {20, 20, 60, 60, 20, 20, 60, 60, 20, 20};
  cfg.congestion_d1.node_value_std.assign(10, 3.0);

  return cfg;
}

traffic::Disturbance ScenarioRealization::at(int k) const {
  traffic::Disturbance d;
  d.demand = Eigen::Vector2d(demand_o1[k], demand_o2[k]);
  d.congestion_density = Eigen::VectorXd::Constant(1, congestion_d1[k]);
  return d;
}

namespace {

std::vector<double> realize_profile(const ProfileConfig& prof, double horizon_h, int n_steps,
                                    double dt_h, std::mt19937_64& rng, int window) {
  const std::size_t n = prof.node_times_h.size();
  std::vector<double> times = prof.node_times_h;
  std::vector<double> values = prof.node_values;

  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    // One value draw and one timing draw per node, in node order, so the
    // consumed sequence does not depend on which stds happen to be zero.
    const double dv = gauss(rng) * prof.node_value_std[i];
    values[i] = std::max(0.0, values[i] + dv);
    const double jitter = gauss(rng) * prof.time_jitter_std_h;
    if (i > 0 && i + 1 < n) times[i] += jitter;
  }
  // Restore strict ordering after jitter.
  for (std::size_t i = 1; i < n; ++i)
    times[i] = std::clamp(times[i], times[i - 1] + 1e-6, horizon_h);

  std::vector<double> out(n_steps);
  std::size_t seg = 0;
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * dt_h;
    while (seg + 2 < n && t >= times[seg + 1]) ++seg;
    double y;
    if (t <= times.front())
      y = values.front();
    else if (t >= times.back())
      y = values.back();
    else {
      const double t0 = times[seg], t1 = times[seg + 1];
      const double f = (t - t0) / (t1 - t0);
      y = values[seg] + f * (values[seg + 1] - values[seg]);
    }
    out[k] = std::max(y, 0.0);
  }

  if (window > 1) {
    std::vector<double> sm(out.size());
    const int half = window / 2;
    for (int k = 0; k < n_steps; ++k) {
      const int lo = std::max(0, k - half);
      const int hi = std::min(n_steps - 1, k + half);
      double acc = 0.0;
      for (int i = lo; i <= hi; ++i) acc += out[i];
      sm[k] = acc / (hi - lo + 1);
    }
    out = std::move(sm);
  }
  return out;
}

}  // namespace

ScenarioRealization generate_scenario(const ScenarioConfig& cfg, const traffic::MetanetParams& p,
                                      std::uint64_t seed) {
  cfg.validate();
  const double dt = p.T;
  const int n_steps = static_cast<int>(std::llround(cfg.horizon_h / dt));
  std::mt19937_64 rng(seed);

  ScenarioRealization r;
  r.demand_o1 = realize_profile(cfg.demand_o1, cfg.horizon_h, n_steps, dt, rng, cfg.smoothing_window);
  r.demand_o2 = realize_profile(cfg.demand_o2, cfg.horizon_h, n_steps, dt, rng, cfg.smoothing_window);
  r.congestion_d1 =
      realize_profile(cfg.congestion_d1, cfg.horizon_h, n_steps, dt, rng, cfg.smoothing_window);
  return r;
}

SteadyStateResult steady_state_init(const ScenarioRealization& scn,
                                    const traffic::NetworkTopology& topo,
                                    const traffic::MetanetParams& p) {
  using namespace traffic;
  const int warmup_steps = static_cast<int>(std::llround(0.5 / p.T));
  const Disturbance d0 = scn.at(0);

  TrafficState x = TrafficState::free_flow(topo, p);
  SteadyStateResult res;
  res.ramp_flow = 0.0;
  double diff = 0.0;
  for (int k = 0; k < warmup_steps; ++k) {
    // Every metered ramp runs unrestricted: request the capacity and let the
    // simulator clip to the physical bound (metering rate 1).
    int n_ramps = 0;
    for (const auto& o : topo.origins)
      if (o.kind == OriginKind::on_ramp) ++n_ramps;
    ControlInput u;
    u.ramp_flow.resize(n_ramps);
    int idx = 0;
    for (const auto& o : topo.origins)
      if (o.kind == OriginKind::on_ramp) u.ramp_flow[idx++] = o.capacity;

    StepResult sr = step_detailed(x, u, d0, topo, p);
    diff = sr.state.max_abs_diff(x);
    x = sr.state;
    idx = 0;
    for (int o = 0; o < topo.num_origins(); ++o)
      if (topo.origins[o].kind == OriginKind::on_ramp) res.ramp_flow = sr.applied_origin_flow[o];
  }

  res.state = x;
  res.residual = diff;
  res.converged = diff < 1e-6;
  return res;
}

}  // namespace ramplab::scenario
