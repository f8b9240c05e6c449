#include "ramplab/traffic/metanet.hpp"

#include <algorithm>
#include <cmath>

namespace ramplab::traffic {

void NetworkTopology::validate() const {
  if (segments.empty()) throw std::invalid_argument("topology: at least one segment required");
  for (const auto& s : segments)
    if (s.length_km <= 0.0 || s.lanes <= 0.0)
      throw std::invalid_argument("topology: segment length and lanes must be positive");
  for (const auto& o : origins) {
    if (o.entry_segment < 0 || o.entry_segment >= num_segments())
      throw std::invalid_argument("topology: origin entry segment out of range");
    if (o.capacity <= 0.0) throw std::invalid_argument("topology: origin capacity must be positive");
  }
  for (int d : destinations)
    if (d < 0 || d >= num_segments())
      throw std::invalid_argument("topology: destination exit segment out of range");
  for (int c : constrained_origins)
    if (c < 0 || c >= num_origins())
      throw std::invalid_argument("topology: constrained origin index out of range");
}

NetworkTopology NetworkTopology::benchmark() {
  NetworkTopology t;
  t.segments = {Segment{1.0, 2.0}, Segment{1.0, 2.0}, Segment{1.0, 2.0}};
  t.origins = {Origin{OriginKind::mainstream, 3500.0, 0}, Origin{OriginKind::on_ramp, 2000.0, 2}};
  t.destinations = {2};
  t.constrained_origins = {1};
  return t;
}

void MetanetParams::validate() const {
  const double vals[] = {T, tau, eta, kappa, mu, a, rho_crit, v_free, rho_max, w_max};
  for (double v : vals)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("metanet params: all parameters must be strictly positive");
  if (!(rho_crit < rho_max))
    throw std::invalid_argument("metanet params: rho_crit must be below rho_max");
}

TrafficState TrafficState::free_flow(const NetworkTopology& topo, const MetanetParams& p) {
  TrafficState x;
  x.rho = Eigen::VectorXd::Zero(topo.num_segments());
  x.v = Eigen::VectorXd::Constant(topo.num_segments(), p.v_free);
  x.w = Eigen::VectorXd::Zero(topo.num_origins());
  return x;
}

Eigen::VectorXd TrafficState::to_vector() const {
  Eigen::VectorXd x(rho.size() + v.size() + w.size());
  x << rho, v, w;
  return x;
}

TrafficState TrafficState::from_vector(const Eigen::VectorXd& x, const NetworkTopology& topo) {
  const int ns = topo.num_segments(), no = topo.num_origins();
  if (x.size() != 2 * ns + no) throw std::invalid_argument("state vector has wrong dimension");
  TrafficState s;
  s.rho = x.segment(0, ns);
  s.v = x.segment(ns, ns);
  s.w = x.segment(2 * ns, no);
  return s;
}

double TrafficState::max_abs_diff(const TrafficState& other) const {
  double m = (rho - other.rho).cwiseAbs().maxCoeff();
  m = std::max(m, (v - other.v).cwiseAbs().maxCoeff());
  m = std::max(m, (w - other.w).cwiseAbs().maxCoeff());
  return m;
}

bool TrafficState::all_finite() const {
  return rho.allFinite() && v.allFinite() && w.allFinite();
}

double equilibrium_speed(double rho, const MetanetParams& p, double a_override,
                         double rho_crit_override, double v_free_override) {
  if (!std::isfinite(rho)) throw std::invalid_argument("equilibrium_speed: non-finite density");
  const double a = a_override > 0.0 ? a_override : p.a;
  const double rho_crit = rho_crit_override > 0.0 ? rho_crit_override : p.rho_crit;
  const double v_free = v_free_override > 0.0 ? v_free_override : p.v_free;
  return v_free * std::exp(-(1.0 / a) * std::pow(rho / rho_crit, a));
}

double segment_flow(double rho, double v, double lanes) {
  if (!std::isfinite(rho) || !std::isfinite(v))
    throw std::invalid_argument("segment_flow: non-finite input");
  return lanes * rho * v;
}

double origin_flow_upper_bound(double w, double d, double rho_entry, double capacity,
                               const MetanetParams& p, bool* saturated) {
  double density_term = capacity * (p.rho_max - rho_entry) / (p.rho_max - p.rho_crit);
  if (saturated) *saturated = density_term <= 0.0;
  density_term = std::max(density_term, 0.0);
  const double bound = std::min({d + w / p.T, capacity, density_term});
  return std::max(bound, 0.0);
}

double virtual_downstream_density(double rho_last, double d_rho, double rho_crit) {
  return std::max(std::min(rho_last, rho_crit), d_rho);
}

namespace {

void check_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw SimulationDivergedError(std::string("non-finite ") + what);
}

}  // namespace

StepResult step_detailed(const TrafficState& x, const ControlInput& u, const Disturbance& d,
                         const NetworkTopology& topo, const MetanetParams& p) {
  const int ns = topo.num_segments();
  const int no = topo.num_origins();

  StepResult out;
  out.applied_origin_flow = Eigen::VectorXd::Zero(no);
  out.segment_flow = Eigen::VectorXd::Zero(ns);

  // Applied origin flows: mainstream origins run at their physical bound,
  // metered ramps get the requested flow clipped to it.
  int ramp_idx = 0;
  for (int o = 0; o < no; ++o) {
    const Origin& org = topo.origins[o];
    const double bound =
        origin_flow_upper_bound(x.w[o], d.demand[o], x.rho[org.entry_segment], org.capacity, p);
    if (org.kind == OriginKind::mainstream) {
      out.applied_origin_flow[o] = bound;
    } else {
      const double requested = u.ramp_flow[ramp_idx++];
      const double applied = std::clamp(requested, 0.0, bound);
      if (applied != requested) out.control_clipped = true;
      out.applied_origin_flow[o] = applied;
    }
  }

  for (int j = 0; j < ns; ++j)
    out.segment_flow[j] = segment_flow(x.rho[j], x.v[j], topo.segments[j].lanes);

  // Ramp inflow (with merging term) per segment; mainstream inflow feeds the
  // convection boundary of its entry segment instead.
  Eigen::VectorXd ramp_inflow = Eigen::VectorXd::Zero(ns);
  Eigen::VectorXd mainstream_inflow = Eigen::VectorXd::Zero(ns);
  for (int o = 0; o < no; ++o) {
    const Origin& org = topo.origins[o];
    if (org.kind == OriginKind::on_ramp)
      ramp_inflow[org.entry_segment] += out.applied_origin_flow[o];
    else
      mainstream_inflow[org.entry_segment] += out.applied_origin_flow[o];
  }

  // Downstream boundary density per segment: next segment, or the virtual
  // density at destination exits.
  Eigen::VectorXd rho_down(ns);
  for (int j = 0; j < ns; ++j) rho_down[j] = j + 1 < ns ? x.rho[j + 1] : x.rho[j];
  for (std::size_t i = 0; i < topo.destinations.size(); ++i) {
    const int j = topo.destinations[i];
    rho_down[j] = virtual_downstream_density(x.rho[j], d.congestion_density[static_cast<int>(i)],
                                             p.rho_crit);
  }

  TrafficState next;
  next.rho.resize(ns);
  next.v.resize(ns);
  next.w.resize(no);

  for (int j = 0; j < ns; ++j) {
    const double L = topo.segments[j].length_km;
    const double lam = topo.segments[j].lanes;
    const double q_up = (j > 0 ? out.segment_flow[j - 1] : 0.0) + mainstream_inflow[j];
    const double v_up = j > 0 ? x.v[j - 1] : x.v[j];

    next.rho[j] = x.rho[j] + p.T / (L * lam) * (q_up - out.segment_flow[j] + ramp_inflow[j]);

    double v_next = x.v[j];
    v_next += p.T / p.tau * (equilibrium_speed(x.rho[j], p) - x.v[j]);
    v_next += p.T / L * x.v[j] * (v_up - x.v[j]);
    v_next -= p.eta * p.T / (p.tau * L) * (rho_down[j] - x.rho[j]) / (x.rho[j] + p.kappa);
    if (ramp_inflow[j] > 0.0)
      v_next -= p.mu * p.T * ramp_inflow[j] * x.v[j] / (L * lam * (x.rho[j] + p.kappa));
    next.v[j] = v_next;

    check_finite(next.rho[j], "segment density");
    check_finite(next.v[j], "segment speed");
    next.rho[j] = std::max(next.rho[j], 0.0);
    next.v[j] = std::max(next.v[j], 0.0);
  }

  for (int o = 0; o < no; ++o) {
    next.w[o] = x.w[o] + p.T * (d.demand[o] - out.applied_origin_flow[o]);
    check_finite(next.w[o], "origin queue");
    next.w[o] = std::max(next.w[o], 0.0);
  }

  out.state = std::move(next);
  return out;
}

TrafficState step(const TrafficState& x, const ControlInput& u, const Disturbance& d,
                  const NetworkTopology& topo, const MetanetParams& p) {
  return step_detailed(x, u, d, topo, p).state;
}

StageCostBreakdown stage_cost(const TrafficState& x, const ControlInput& u,
                              const ControlInput& u_prev, const NetworkTopology& topo,
                              const MetanetParams& p, const StageCostWeights& weights) {
  StageCostBreakdown c;

  for (int j = 0; j < topo.num_segments(); ++j)
    c.tts += topo.segments[j].length_km * topo.segments[j].lanes * x.rho[j];
  c.tts += x.w.sum();
  c.tts *= p.T;

  int ramp_idx = 0;
  for (const auto& org : topo.origins) {
    if (org.kind != OriginKind::on_ramp) continue;
    const double dr = (u.ramp_flow[ramp_idx] - u_prev.ramp_flow[ramp_idx]) / org.capacity;
    c.variability += dr * dr;
    ++ramp_idx;
  }

  for (int o : topo.constrained_origins) c.violation += std::max(0.0, x.w[o] - p.w_max);

  c.total = weights.c_T * c.tts + weights.c_V * c.variability + weights.c_C * c.violation;
  return c;
}

}  // namespace ramplab::traffic
