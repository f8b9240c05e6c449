#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramplab/baselines/pi_alinea.hpp"
#include "ramplab/mpc/approximator.hpp"
#include "ramplab/rl/qlearning.hpp"
#include "ramplab/scenario/scenario.hpp"

namespace ramplab::harness {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ControllerKind { mpcrl, mpc_fixed, pi_alinea };

const char* to_string(ControllerKind k);
ControllerKind controller_from_string(const std::string& s);

enum class TraceRetention { none, edges, all };

/// Everything one experiment needs: the true process, the scenario generator,
/// the controller and its believed constants, the learner, and run control.
struct ExperimentConfig {
  traffic::NetworkTopology topology = traffic::NetworkTopology::benchmark();
  traffic::MetanetParams true_params{};
  traffic::StageCostWeights weights{};
  scenario::ScenarioConfig scenario = scenario::ScenarioConfig::benchmark();

  ControllerKind controller = ControllerKind::mpcrl;
  mpc::HorizonConfig horizon{};
  mpc::AblationFlags flags{};
  double mismatch_rho_crit = 0.7;
  double mismatch_a = 1.3;
  double mismatch_v_free = 1.3;
  nlp::SolverOptions solver{};

  rl::LearnerConfig learner{};
  baselines::PiAlineaGains pi_gains{};
  baselines::RandomSearchConfig tune{};

  int episodes = 80;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::string out_dir = "runs/default";
  std::string theta_path;  // optional: evaluate a trained parametrisation
  TraceRetention traces = TraceRetention::edges;
  int tune_seeds = 2;      // evaluation seeds per tuning candidate
  int threads = 0;         // 0 = one per seed, capped by the hardware

  mpc::FixedMpcConstants mpc_constants() const {
    return mpc::FixedMpcConstants::mismatched(true_params, mismatch_rho_crit, mismatch_a,
                                              mismatch_v_free);
  }
  mpc::ThetaVector initial_theta() const {
    return mpc::ThetaVector::initial(flags, topology, true_params, horizon, mismatch_rho_crit,
                                     mismatch_a, mismatch_v_free);
  }
  int steps_per_episode() const;
  int controls_per_episode() const { return steps_per_episode() / horizon.M; }

  void validate() const;
  void apply_desk_preset();

  std::string to_json_string() const;
  static ExperimentConfig from_json_string(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;
};

/// Stable 64-bit digest of the resolved config; guards crash-resume against
/// mismatched snapshots.
std::uint64_t config_digest(const ExperimentConfig& cfg);

/// Per-stream deterministic seed derivation (seed, episode, stream role).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t episode, std::uint64_t stream);

}  // namespace ramplab::harness
