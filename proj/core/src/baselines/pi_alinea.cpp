#include "ramplab/baselines/pi_alinea.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <stdexcept>
#include <vector>

namespace ramplab::baselines {

double pi_alinea_action(double rho_now, double rho_prev, double r_prev,
                        const PiAlineaGains& gains, double capacity) {
  const double r = r_prev - gains.K_P * (rho_now - rho_prev) +
                   gains.K_I * (gains.rho_setpoint - rho_now);
  return std::clamp(r, 0.0, capacity);
}

double queue_override(double r_pi, double w, double d, double w_max, double T_ctrl_h,
                      double capacity) {
  const double r_q = d + (w - w_max) / T_ctrl_h;
  return std::clamp(std::max(r_pi, r_q), 0.0, capacity);
}

PiAlineaGains tune_gains(const std::function<double(const PiAlineaGains&)>& objective,
                         const RandomSearchConfig& cfg, std::uint64_t seed, double* best_cost) {
  if (cfg.budget < 1) throw std::invalid_argument("tune_gains: budget must be >= 1");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<PiAlineaGains> candidates(cfg.budget);
  for (auto& g : candidates) {
    g.K_P = std::exp(std::log(cfg.kp_min) + u01(rng) * (std::log(cfg.kp_max) - std::log(cfg.kp_min)));
    g.K_I = std::exp(std::log(cfg.ki_min) + u01(rng) * (std::log(cfg.ki_max) - std::log(cfg.ki_min)));
  }

  std::vector<double> costs(cfg.budget);
  if (cfg.parallel) {
    std::vector<std::future<double>> futures;
    futures.reserve(cfg.budget);
    for (const auto& g : candidates)
      futures.push_back(std::async(std::launch::async, [&objective, g] { return objective(g); }));
    for (int i = 0; i < cfg.budget; ++i) costs[i] = futures[i].get();
  } else {
    for (int i = 0; i < cfg.budget; ++i) costs[i] = objective(candidates[i]);
  }

  int best = -1;
  for (int i = 0; i < cfg.budget; ++i) {
    if (!std::isfinite(costs[i])) continue;
    if (best < 0 || costs[i] < costs[best]) best = i;
  }
  if (best < 0) throw std::runtime_error("tune_gains: every candidate diverged");
  if (best_cost) *best_cost = costs[best];
  return candidates[best];
}

}  // namespace ramplab::baselines
