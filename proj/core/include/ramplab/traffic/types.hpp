#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ramplab::traffic {

enum class OriginKind { mainstream, on_ramp };

struct Segment {
  double length_km = 1.0;
  double lanes = 2.0;
};

struct Origin {
  OriginKind kind = OriginKind::on_ramp;
  double capacity = 2000.0;   // veh/h
  int entry_segment = 0;      // index into segments
};

/// Static description of the freeway stretch: ordered mainline segments,
/// origins feeding them, exit destinations, and which origin queues are
/// subject to the maximum-queue requirement.
struct NetworkTopology {
  std::vector<Segment> segments;
  std::vector<Origin> origins;
  std::vector<int> destinations;          // exit segment indices
  std::vector<int> constrained_origins;   // origin indices with a queue limit

  int num_segments() const { return static_cast<int>(segments.size()); }
  int num_origins() const { return static_cast<int>(origins.size()); }
  int state_dim() const { return 2 * num_segments() + num_origins(); }

  bool is_constrained(int origin) const {
    for (int o : constrained_origins)
      if (o == origin) return true;
    return false;
  }

  void validate() const;

  /// Three 1 km x 2 lane segments, mainstream origin O1 (3500 veh/h) into S1,
  /// metered on-ramp O2 (2000 veh/h) into S3, one congested destination after
  /// S3. Only O2 carries the queue limit.
  static NetworkTopology benchmark();
};

/// Model parameters in canonical units: hours, km, veh/h, veh/km/lane.
/// T is stored in hours (10 s = 1/360 h).
struct MetanetParams {
  double T = 10.0 / 3600.0;   // process step, h
  double tau = 18.0 / 3600.0; // relaxation time, h
  double eta = 60.0;          // anticipation, km^2/lane
  double kappa = 40.0;        // veh/km/lane
  double mu = 0.0122;         // merging speed-drop coefficient
  double a = 1.867;           // equilibrium-speed exponent
  double rho_crit = 33.5;     // veh/km/lane
  double v_free = 102.0;      // km/h
  double rho_max = 180.0;     // veh/km/lane
  double w_max = 50.0;        // veh, queue limit on constrained origins

  void validate() const;
};

/// Per-segment densities and speeds plus per-origin queues at one process step.
struct TrafficState {
  Eigen::VectorXd rho;  // veh/km/lane per segment
  Eigen::VectorXd v;    // km/h per segment
  Eigen::VectorXd w;    // veh per origin

  static TrafficState free_flow(const NetworkTopology& topo, const MetanetParams& p);
  Eigen::VectorXd to_vector() const;
  static TrafficState from_vector(const Eigen::VectorXd& x, const NetworkTopology& topo);

  double max_abs_diff(const TrafficState& other) const;
  bool all_finite() const;
};

/// Uncontrollable external inputs: demand per origin and congestion density
/// per destination.
struct Disturbance {
  Eigen::VectorXd demand;              // veh/h per origin
  Eigen::VectorXd congestion_density;  // veh/km/lane per destination
};

/// Requested ramp flow for each controlled on-ramp (benchmark: scalar, O2).
struct ControlInput {
  Eigen::VectorXd ramp_flow;  // veh/h

  static ControlInput scalar(double r) {
    ControlInput u;
    u.ramp_flow = Eigen::VectorXd::Constant(1, r);
    return u;
  }
};

struct StageCostWeights {
  double c_T = 5.0;
  double c_V = 1600.0;
  double c_C = 5.0;
};

struct StageCostBreakdown {
  double tts = 0.0;          // veh*h
  double variability = 0.0;  // dimensionless
  double violation = 0.0;    // veh
  double total = 0.0;        // c_T*tts + c_V*variability + c_C*violation
};

class SimulationDivergedError : public std::runtime_error {
 public:
  explicit SimulationDivergedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ramplab::traffic
