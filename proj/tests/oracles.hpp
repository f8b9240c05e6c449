#pragma once

// Test-only reference implementations, kept deliberately independent of the
// library code paths they check. The traffic oracle is a straight-line scalar
// transcription of the benchmark dynamics for the three-segment network.

#include <algorithm>
#include <array>
#include <cmath>

namespace oracles {

struct BenchmarkConstants {
  double T = 10.0 / 3600.0;
  double tau = 18.0 / 3600.0;
  double eta = 60.0;
  double kappa = 40.0;
  double mu = 0.0122;
  double a = 1.867;
  double rho_crit = 33.5;
  double v_free = 102.0;
  double rho_max = 180.0;
  double L = 1.0;
  double lam = 2.0;
  double C1 = 3500.0;
  double C2 = 2000.0;
};

// x = [rho1 rho2 rho3 v1 v2 v3 w1 w2]; returns the applied O2 flow through *r_applied.
inline std::array<double, 8> metanet_step(const std::array<double, 8>& x, double r_requested,
                                          double d1, double d2, double d_rho,
                                          double* r_applied_out = nullptr,
                                          const BenchmarkConstants& c = {}) {
  const double rho1 = x[0], rho2 = x[1], rho3 = x[2];
  const double v1 = x[3], v2 = x[4], v3 = x[5];
  const double w1 = x[6], w2 = x[7];

  const auto Ve = [&](double rho) {
    return c.v_free * std::exp(-(1.0 / c.a) * std::pow(rho / c.rho_crit, c.a));
  };

  const double q1 = c.lam * rho1 * v1;
  const double q2 = c.lam * rho2 * v2;
  const double q3 = c.lam * rho3 * v3;

  const double q_o1 = std::max(
      0.0, std::min({d1 + w1 / c.T, c.C1,
                     c.C1 * (c.rho_max - rho1) / (c.rho_max - c.rho_crit)}));
  const double bound2 = std::max(
      0.0, std::min({d2 + w2 / c.T, c.C2,
                     c.C2 * (c.rho_max - rho3) / (c.rho_max - c.rho_crit)}));
  const double r = std::clamp(r_requested, 0.0, bound2);
  if (r_applied_out) *r_applied_out = r;

  const double rho_down = std::max(std::min(rho3, c.rho_crit), d_rho);

  std::array<double, 8> n{};
  n[0] = rho1 + c.T / (c.L * c.lam) * (q_o1 - q1);
  n[1] = rho2 + c.T / (c.L * c.lam) * (q1 - q2);
  n[2] = rho3 + c.T / (c.L * c.lam) * (q2 - q3 + r);

  n[3] = v1 + c.T / c.tau * (Ve(rho1) - v1) + c.T / c.L * v1 * (v1 - v1) -
         c.eta * c.T / (c.tau * c.L) * (rho2 - rho1) / (rho1 + c.kappa);
  n[4] = v2 + c.T / c.tau * (Ve(rho2) - v2) + c.T / c.L * v2 * (v1 - v2) -
         c.eta * c.T / (c.tau * c.L) * (rho3 - rho2) / (rho2 + c.kappa);
  n[5] = v3 + c.T / c.tau * (Ve(rho3) - v3) + c.T / c.L * v3 * (v2 - v3) -
         c.eta * c.T / (c.tau * c.L) * (rho_down - rho3) / (rho3 + c.kappa) -
         c.mu * c.T * r * v3 / (c.L * c.lam * (rho3 + c.kappa));

  n[6] = w1 + c.T * (d1 - q_o1);
  n[7] = w2 + c.T * (d2 - r);

  for (int i = 0; i < 6; ++i) n[i] = std::max(n[i], 0.0);
  n[6] = std::max(n[6], 0.0);
  n[7] = std::max(n[7], 0.0);
  return n;
}

}  // namespace oracles
