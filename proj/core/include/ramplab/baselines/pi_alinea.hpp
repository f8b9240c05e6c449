#pragma once

#include <cstdint>
#include <functional>

namespace ramplab::baselines {

struct PiAlineaGains {
  double K_P = 70.0;          // veh/h per veh/km/lane
  double K_I = 4.0;           // veh/h per veh/km/lane
  double rho_setpoint = 23.45;  // the controller's believed critical density
};

/// r = clamp(r_prev - K_P (rho_now - rho_prev) + K_I (rho_sp - rho_now), 0, C),
/// evaluated once per control period on the merge-segment density.
double pi_alinea_action(double rho_now, double rho_prev, double r_prev,
                        const PiAlineaGains& gains, double capacity);

/// Queue-management override: floor the metering command at
/// r_q = d + (w - w_max)/T_ctrl so the queue drains back to its limit.
double queue_override(double r_pi, double w, double d, double w_max, double T_ctrl_h,
                      double capacity);

struct RandomSearchConfig {
  int budget = 100;
  double kp_min = 1.0, kp_max = 200.0;   // log-uniform range for K_P
  double ki_min = 0.5, ki_max = 100.0;   // log-uniform range for K_I
  bool parallel = true;
};

/// Log-uniform random search over the gain box. `objective` evaluates a
/// candidate on fixed-seed episodes and returns the mean total cost (NaN or
/// infinity marks a diverged candidate). Deterministic given the seed.
PiAlineaGains tune_gains(const std::function<double(const PiAlineaGains&)>& objective,
                         const RandomSearchConfig& cfg, std::uint64_t seed,
                         double* best_cost = nullptr);

}  // namespace ramplab::baselines
