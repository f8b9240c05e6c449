#pragma once

#include <string>
#include <vector>

#include "ramplab/harness/episode.hpp"

namespace ramplab::harness {

struct SeedArtifacts {
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> episodes;
  std::vector<Eigen::VectorXd> theta_history;  // row 0 = initial, then one per episode
  std::vector<double> td_deltas;               // recorded transitions, in order
  std::vector<rl::UpdateReport> updates;
  Eigen::VectorXd final_theta;
  bool degraded = false;
};

struct RunArtifacts {
  ExperimentConfig config;
  std::vector<SeedArtifacts> seeds;

  bool any_degraded() const {
    for (const auto& s : seeds)
      if (s.degraded) return true;
    return false;
  }
  Eigen::VectorXd mean_final_theta() const;
};

/// Episodic training of the MPC-RL controller: per seed, run an episode,
/// append its transitions to the replay buffer, apply one parameter update,
/// decay the schedules, persist everything, repeat. Crash-resumable at
/// episode granularity through the per-seed snapshot files.
RunArtifacts train(const ExperimentConfig& cfg);

/// Evaluation without learning or exploration for any controller; mpcrl uses
/// the parametrisation from cfg.theta_path (falling back to the initial one).
RunArtifacts evaluate(const ExperimentConfig& cfg);

/// Random-search tuning of the PI-ALINEA gains on fixed-seed episodes;
/// returns the tuned gains and writes them to out_dir/tuned_gains.json.
baselines::PiAlineaGains tune_baseline(const ExperimentConfig& cfg, double* best_cost = nullptr);

/// Mean total episode cost of a controller config over its seeds; used by the
/// tuner and the tests.
double mean_total_cost(const RunArtifacts& artifacts);

Eigen::VectorXd load_theta_json(const std::string& path, int expected_dim);
void save_theta_json(const std::string& path, const Eigen::VectorXd& theta,
                     const std::vector<std::string>& names);

}  // namespace ramplab::harness
