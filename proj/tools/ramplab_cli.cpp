#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "ramplab/harness/export.hpp"
#include "ramplab/harness/train.hpp"

namespace {

using namespace ramplab;
using harness::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  int episodes = -1;
  std::string out;
  bool desk = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config file (JSON)");
  cmd->add_option("--seed", flags.seeds, "seed list override");
  cmd->add_option("--episodes", flags.episodes, "episode count override");
  cmd->add_option("--out", flags.out, "output directory override");
  cmd->add_flag("--desk", flags.desk, "desk-scale preset: Np=12, 20 episodes, 3 seeds");
}

ExperimentConfig resolve(const CommonFlags& flags) {
  ExperimentConfig cfg = flags.config_path.empty()
                             ? ExperimentConfig{}
                             : ExperimentConfig::load(flags.config_path);
  if (flags.desk) cfg.apply_desk_preset();
  if (!flags.seeds.empty()) cfg.seeds = flags.seeds;
  if (flags.episodes > 0) cfg.episodes = flags.episodes;
  if (!flags.out.empty()) cfg.out_dir = flags.out;
  cfg.validate();
  return cfg;
}

int run_train(const CommonFlags& flags) {
  ExperimentConfig cfg = resolve(flags);
  cfg.controller = harness::ControllerKind::mpcrl;
  const harness::RunArtifacts art = harness::train(cfg);
  std::printf("trained %zu seed(s), %d episodes each; artifacts in %s\n", art.seeds.size(),
              cfg.episodes, cfg.out_dir.c_str());
  std::printf("mean total cost %.6g\n", harness::mean_total_cost(art));
  return art.any_degraded() ? 3 : 0;
}

int run_evaluate(const CommonFlags& flags, const std::string& controller,
                 const std::string& theta_path) {
  ExperimentConfig cfg = resolve(flags);
  if (!controller.empty()) cfg.controller = harness::controller_from_string(controller);
  if (!theta_path.empty()) cfg.theta_path = theta_path;
  const harness::RunArtifacts art = harness::evaluate(cfg);
  std::printf("evaluated %s over %zu seed(s) x %d episode(s); mean total cost %.6g\n",
              harness::to_string(cfg.controller), art.seeds.size(), cfg.episodes,
              harness::mean_total_cost(art));
  return art.any_degraded() ? 3 : 0;
}

int run_tune(const CommonFlags& flags) {
  ExperimentConfig cfg = resolve(flags);
  double best = 0.0;
  const baselines::PiAlineaGains g = harness::tune_baseline(cfg, &best);
  std::printf("tuned PI-ALINEA gains: K_P=%.6g K_I=%.6g (mean total cost %.6g)\n", g.K_P, g.K_I,
              best);
  std::printf("written to %s/tuned_gains.json\n", cfg.out_dir.c_str());
  return 0;
}

int run_export(const CommonFlags& flags, const std::string& export_dir) {
  const std::string out = flags.out.empty() ? "runs/default" : flags.out;
  const std::string dst = export_dir.empty() ? out + "/export" : export_dir;
  const harness::ExportManifest manifest = harness::export_report(out, dst);
  for (const auto& f : manifest.written) std::printf("wrote %s\n", f.c_str());
  for (const auto& s : manifest.skipped) std::printf("skipped %s\n", s.c_str());
  return 0;
}

int run_validate(const CommonFlags& flags) {
  const ExperimentConfig cfg = resolve(flags);
  std::printf("%s\n", cfg.to_json_string().c_str());
  std::fprintf(stderr, "config ok: %d episodes, %zu seeds, controller %s\n", cfg.episodes,
               cfg.seeds.size(), harness::to_string(cfg.controller));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"METANET ramp-metering lab: parametric-MPC reinforcement learning harness"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, tune_flags, export_flags, validate_flags;
  std::string eval_controller, eval_theta, export_dir;

  CLI::App* train_cmd = app.add_subcommand("train", "train the MPC-RL controller");
  add_common(train_cmd, train_flags);

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "run a controller without learning");
  add_common(eval_cmd, eval_flags);
  eval_cmd->add_option("--controller", eval_controller, "mpcrl | mpc-fixed | pi-alinea");
  eval_cmd->add_option("--theta", eval_theta, "trained parametrisation JSON for mpcrl");

  CLI::App* tune_cmd = app.add_subcommand("tune-baseline", "random-search the PI-ALINEA gains");
  add_common(tune_cmd, tune_flags);

  CLI::App* export_cmd = app.add_subcommand("export", "write figure-data CSVs from a run");
  add_common(export_cmd, export_flags);
  export_cmd->add_option("--dest", export_dir, "destination directory (default <out>/export)");

  CLI::App* validate_cmd = app.add_subcommand("validate-config", "parse, validate and echo");
  add_common(validate_cmd, validate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_flags);
    if (eval_cmd->parsed()) return run_evaluate(eval_flags, eval_controller, eval_theta);
    if (tune_cmd->parsed()) return run_tune(tune_flags);
    if (export_cmd->parsed()) return run_export(export_flags, export_dir);
    if (validate_cmd->parsed()) return run_validate(validate_flags);
  } catch (const ramplab::harness::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
