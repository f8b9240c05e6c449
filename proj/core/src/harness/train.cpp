#include "ramplab/harness/train.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ramplab/harness/export.hpp"

namespace ramplab::harness {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::VectorXd RunArtifacts::mean_final_theta() const {
  if (seeds.empty() || seeds.front().final_theta.size() == 0) return {};
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(seeds.front().final_theta.size());
  for (const auto& s : seeds) acc += s.final_theta;
  return acc / static_cast<double>(seeds.size());
}

double mean_total_cost(const RunArtifacts& artifacts) {
  double acc = 0.0;
  int n = 0;
  for (const auto& s : artifacts.seeds)
    for (const auto& e : s.episodes) {
      acc += e.total_cost;
      ++n;
    }
  return n > 0 ? acc / n : std::numeric_limits<double>::quiet_NaN();
}

void save_theta_json(const std::string& path, const Eigen::VectorXd& theta,
                     const std::vector<std::string>& names) {
  json j;
  j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  j["names"] = names;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

Eigen::VectorXd load_theta_json(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open theta file: " + path);
  json j;
  in >> j;
  const auto v = j.at("theta").get<std::vector<double>>();
  if (expected_dim >= 0 && static_cast<int>(v.size()) != expected_dim)
    throw ConfigError("theta file has dimension " + std::to_string(v.size()) + ", expected " +
                      std::to_string(expected_dim));
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<int>(v.size()));
}

namespace {

std::mutex g_progress_mutex;

void progress(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_progress_mutex);
  std::fputs((line + "\n").c_str(), stderr);
}

std::string seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.out_dir + "/seed_" + std::to_string(seed);
}

json metrics_to_json(const EpisodeMetrics& m) {
  return json{{"episode", m.episode},
              {"tts_raw", m.tts_raw},
              {"var_raw", m.var_raw},
              {"viol_raw", m.viol_raw},
              {"max_queue", m.max_queue},
              {"violating_steps", m.violating_steps},
              {"mean_abs_td", m.mean_abs_td},
              {"degraded_solves", m.degraded_solves},
              {"failed", m.failed}};
}

EpisodeMetrics metrics_from_json(const json& j, const ExperimentConfig& cfg) {
  EpisodeMetrics m;
  m.episode = j.at("episode");
  m.tts_raw = j.at("tts_raw");
  m.var_raw = j.at("var_raw");
  m.viol_raw = j.at("viol_raw");
  m.max_queue = j.at("max_queue");
  m.violating_steps = j.at("violating_steps");
  m.mean_abs_td = j.at("mean_abs_td");
  m.degraded_solves = j.at("degraded_solves");
  m.failed = j.at("failed");
  m.tts_cost = cfg.weights.c_T * m.tts_raw;
  m.var_cost = cfg.weights.c_V * m.var_raw;
  m.viol_cost = cfg.weights.c_C * m.viol_raw;
  m.total_cost = m.tts_cost + m.var_cost + m.viol_cost;
  return m;
}

struct SeedTrainState {
  mpc::ThetaVector theta;
  rl::LearnerSchedules schedules;
  rl::ReplayBuffer buffer{10};
  int episodes_done = 0;
  SeedArtifacts artifacts;
};

json snapshot_to_json(const ExperimentConfig& cfg, const SeedTrainState& st) {
  json j;
  j["digest"] = config_digest(cfg);
  j["episodes_done"] = st.episodes_done;
  j["alpha"] = st.schedules.alpha;
  j["sigma_q"] = st.schedules.sigma_q;
  j["epsilon"] = st.schedules.epsilon;
  j["theta"] = std::vector<double>(st.theta.value.data(),
                                   st.theta.value.data() + st.theta.value.size());
  j["degraded"] = st.artifacts.degraded;

  json hist = json::array();
  for (const auto& t : st.artifacts.theta_history)
    hist.push_back(std::vector<double>(t.data(), t.data() + t.size()));
  j["theta_history"] = hist;

  json eps = json::array();
  for (const auto& m : st.artifacts.episodes) eps.push_back(metrics_to_json(m));
  j["episodes"] = eps;
  j["td_deltas"] = st.artifacts.td_deltas;

  json ups = json::array();
  for (const auto& u : st.artifacts.updates)
    ups.push_back(json{{"p_norm", u.p_norm},
                       {"h_condition", u.h_condition},
                       {"regularization", u.regularization},
                       {"mean_abs_delta", u.mean_abs_delta},
                       {"used", u.used},
                       {"skipped", u.skipped},
                       {"ok", u.ok},
                       {"step_norm", u.delta_theta.size() ? u.delta_theta.norm() : 0.0},
                       {"active_bounds", static_cast<int>(u.active_bounds.size())}});
  j["updates"] = ups;

  json buf = json::array();
  for (int i = 0; i < st.buffer.size(); ++i) {
    const rl::Transition& t = st.buffer.at(i);
    buf.push_back(json{
        {"episode", t.episode},
        {"index", t.index},
        {"cost", t.cost},
        {"q_value", t.q_value},
        {"next_value", t.next_value},
        {"valid", t.valid},
        {"q_gradient",
         std::vector<double>(t.q_gradient.data(), t.q_gradient.data() + t.q_gradient.size())},
    });
  }
  j["buffer"] = buf;
  return j;
}

bool snapshot_from_json(const json& j, const ExperimentConfig& cfg, SeedTrainState& st) {
  if (!j.contains("digest") || j.at("digest").get<std::uint64_t>() != config_digest(cfg))
    return false;
  st.episodes_done = j.at("episodes_done");
  st.schedules.alpha = j.at("alpha");
  st.schedules.sigma_q = j.at("sigma_q");
  st.schedules.epsilon = j.at("epsilon");
  const auto tv = j.at("theta").get<std::vector<double>>();
  if (static_cast<int>(tv.size()) != st.theta.dim()) return false;
  st.theta.value = Eigen::Map<const Eigen::VectorXd>(tv.data(), static_cast<int>(tv.size()));
  st.artifacts.degraded = j.at("degraded");

  st.artifacts.theta_history.clear();
  for (const auto& row : j.at("theta_history")) {
    const auto v = row.get<std::vector<double>>();
    st.artifacts.theta_history.push_back(
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<int>(v.size())));
  }
  st.artifacts.episodes.clear();
  for (const auto& row : j.at("episodes"))
    st.artifacts.episodes.push_back(metrics_from_json(row, cfg));
  st.artifacts.td_deltas = j.at("td_deltas").get<std::vector<double>>();

  st.artifacts.updates.clear();
  for (const auto& row : j.at("updates")) {
    rl::UpdateReport u;
    u.p_norm = row.at("p_norm");
    u.h_condition = row.at("h_condition");
    u.regularization = row.at("regularization");
    u.mean_abs_delta = row.at("mean_abs_delta");
    u.used = row.at("used");
    u.skipped = row.at("skipped");
    u.ok = row.at("ok");
    st.artifacts.updates.push_back(std::move(u));
  }

  for (const auto& row : j.at("buffer")) {
    rl::Transition t;
    t.episode = row.at("episode");
    t.index = row.at("index");
    t.cost = row.at("cost");
    t.q_value = row.at("q_value");
    t.next_value = row.at("next_value");
    t.valid = row.at("valid");
    const auto g = row.at("q_gradient").get<std::vector<double>>();
    t.q_gradient = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<int>(g.size()));
    t.state = Eigen::VectorXd::Zero(1);
    t.next_state = Eigen::VectorXd::Zero(1);
    t.disturbance = Eigen::VectorXd::Zero(1);
    st.buffer.push(std::move(t));
  }
  return true;
}

void write_seed_files(const ExperimentConfig& cfg, std::uint64_t seed, const SeedTrainState& st,
                      bool training) {
  const std::string dir = seed_dir(cfg, seed);
  fs::create_directories(dir);

  write_episodes_csv(dir + "/episodes.csv", st.artifacts.episodes);
  if (training) {
    write_theta_csv(dir + "/theta.csv", st.artifacts.theta_history, st.theta.layout);
    write_td_csv(dir + "/td.csv", st.artifacts.td_deltas, cfg.controls_per_episode() - 1);
    write_updates_csv(dir + "/updates.csv", st.artifacts.updates);
  }
}

bool should_trace(const ExperimentConfig& cfg, int episode) {
  switch (cfg.traces) {
    case TraceRetention::none: return false;
    case TraceRetention::all: return true;
    case TraceRetention::edges: return episode == 0 || episode == cfg.episodes - 1;
  }
  return false;
}

void maybe_write_trace(const ExperimentConfig& cfg, std::uint64_t seed, const EpisodeMetrics& m) {
  if (!m.has_traces) return;
  const std::string dir = seed_dir(cfg, seed) + "/traces";
  fs::create_directories(dir);
  write_trace_csv(dir + "/ep_" + std::to_string(m.episode) + ".csv", m, cfg.true_params.T);
}

SeedArtifacts train_one_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedTrainState st;
  st.theta = cfg.initial_theta();
  st.schedules = rl::LearnerSchedules::from(cfg.learner);
  st.buffer = rl::ReplayBuffer(10);
  st.artifacts.seed = seed;

  const std::string snap_path = seed_dir(cfg, seed) + "/snapshot.json";
  if (fs::exists(snap_path)) {
    std::ifstream in(snap_path);
    json j;
    try {
      in >> j;
      SeedTrainState restored = st;
      if (snapshot_from_json(j, cfg, restored)) {
        st = std::move(restored);
        progress("[seed " + std::to_string(seed) + "] resuming at episode " +
                 std::to_string(st.episodes_done));
      }
    } catch (const json::exception&) {
      // unreadable snapshot: start over
    }
  }
  if (st.artifacts.theta_history.empty()) st.artifacts.theta_history.push_back(st.theta.value);

  MpcController controller(cfg, st.theta);

  for (int e = st.episodes_done; e < cfg.episodes; ++e) {
    const std::uint64_t scen_seed = derive_seed(seed, e, 0);
    std::mt19937_64 explore_rng(derive_seed(seed, e, 1));
    std::mt19937_64 batch_rng(derive_seed(seed, e, 2));

    const scenario::ScenarioRealization scn =
        scenario::generate_scenario(cfg.scenario, cfg.true_params, scen_seed);

    controller.set_theta(st.theta);
    controller.arm_exploration(&explore_rng, &st.schedules);

    EpisodeOptions opts;
    opts.record_transitions = true;
    opts.retain_traces = should_trace(cfg, e);
    opts.episode_index = e;
    opts.gamma = cfg.learner.gamma;
    opts.td_discount_exponent = cfg.learner.td_discount_exponent;

    EpisodeResult res = run_episode(cfg, controller, scn, opts);
    if (res.metrics.failed ||
        res.metrics.degraded_solves > cfg.controls_per_episode() / 10)
      st.artifacts.degraded = true;

    for (const auto& t : res.transitions) {
      if (t.valid) st.artifacts.td_deltas.push_back(rl::td_error(t, cfg.learner));
      st.buffer.push(t);
    }

    // one parametrisation update per episode
    rl::UpdateReport report;
    if (!st.buffer.empty()) {
      try {
        const auto batch = rl::sample_batch(st.buffer, cfg.learner, batch_rng);
        const rl::UpdateData update = rl::build_update(batch, cfg.learner);
        report = rl::apply_update(st.theta, update, st.schedules.alpha, cfg.learner);
        if (report.ok) st.schedules.decay_after_update(cfg.learner);
      } catch (const std::exception& ex) {
        report.ok = false;
        st.artifacts.degraded = true;
        progress("[seed " + std::to_string(seed) + "] update skipped: " + ex.what());
      }
    }
    st.schedules.decay_after_episode(cfg.learner);

    st.artifacts.episodes.push_back(res.metrics);
    st.artifacts.theta_history.push_back(st.theta.value);
    st.artifacts.updates.push_back(report);
    st.episodes_done = e + 1;

    maybe_write_trace(cfg, seed, res.metrics);
    write_seed_files(cfg, seed, st, true);
    {
      std::ofstream snap(snap_path);
      snap << snapshot_to_json(cfg, st).dump() << "\n";
    }
    {
      std::ostringstream line;
      line << "[seed " << seed << "] episode " << e << "  total " << res.metrics.total_cost
           << "  tts " << res.metrics.tts_cost << "  viol " << res.metrics.viol_cost << "  |td| "
           << res.metrics.mean_abs_td << "  wall " << res.metrics.wall_time_s << "s";
      progress(line.str());
    }
  }

  st.artifacts.final_theta = st.theta.value;
  save_theta_json(seed_dir(cfg, seed) + "/theta_final.json", st.theta.value,
                  theta_names(st.theta.layout));
  return st.artifacts;
}

SeedArtifacts evaluate_one_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                                const mpc::ThetaVector* theta) {
  SeedArtifacts art;
  art.seed = seed;

  std::unique_ptr<Controller> controller;
  if (cfg.controller == ControllerKind::pi_alinea) {
    controller = std::make_unique<PiAlineaController>(cfg);
  } else {
    controller = std::make_unique<MpcController>(cfg, *theta);
  }

  SeedTrainState st;
  st.artifacts.seed = seed;
  for (int e = 0; e < cfg.episodes; ++e) {
    const scenario::ScenarioRealization scn =
        scenario::generate_scenario(cfg.scenario, cfg.true_params, derive_seed(seed, e, 0));
    EpisodeOptions opts;
    opts.episode_index = e;
    opts.retain_traces = should_trace(cfg, e);
    opts.gamma = cfg.learner.gamma;
    const EpisodeResult res = run_episode(cfg, *controller, scn, opts);
    if (res.metrics.failed || res.metrics.degraded_solves > cfg.controls_per_episode() / 10)
      art.degraded = true;
    art.episodes.push_back(res.metrics);
    maybe_write_trace(cfg, seed, res.metrics);
    st.artifacts.episodes = art.episodes;
    write_seed_files(cfg, seed, st, false);
  }
  return art;
}

template <typename Fn>
std::vector<SeedArtifacts> run_seed_pool(const ExperimentConfig& cfg, Fn&& worker) {
  const int n = static_cast<int>(cfg.seeds.size());
  std::vector<SeedArtifacts> results(n);
  int max_threads = cfg.threads > 0 ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
  max_threads = std::min(max_threads, n);

  std::vector<std::thread> pool;
  std::mutex next_mutex;
  int next = 0;
  auto run = [&] {
    while (true) {
      int idx;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= n) return;
        idx = next++;
      }
      results[idx] = worker(cfg.seeds[idx]);
    }
  };
  for (int t = 0; t < max_threads; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  return results;
}

}  // namespace

RunArtifacts train(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.controller != ControllerKind::mpcrl)
    throw ConfigError("train requires controller = mpcrl");
  fs::create_directories(cfg.out_dir);
  cfg.save(cfg.out_dir + "/config.resolved.json");

  RunArtifacts out;
  out.config = cfg;
  out.seeds = run_seed_pool(cfg, [&](std::uint64_t s) { return train_one_seed(cfg, s); });

  // the trained parametrisation: per-seed finals plus their mean
  std::vector<std::string> names = theta_names(cfg.initial_theta().layout);
  Eigen::VectorXd mean = out.mean_final_theta();
  if (mean.size() > 0) save_theta_json(cfg.out_dir + "/theta_final.json", mean, names);
  return out;
}

RunArtifacts evaluate(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  cfg.save(cfg.out_dir + "/config.resolved.json");

  mpc::ThetaVector theta = cfg.initial_theta();
  if (cfg.controller == ControllerKind::mpcrl && !cfg.theta_path.empty())
    theta.value = load_theta_json(cfg.theta_path, theta.dim());

  RunArtifacts out;
  out.config = cfg;
  out.seeds =
      run_seed_pool(cfg, [&](std::uint64_t s) { return evaluate_one_seed(cfg, s, &theta); });
  write_summary_json(cfg.out_dir + "/summary.json", out);
  return out;
}

baselines::PiAlineaGains tune_baseline(const ExperimentConfig& cfg, double* best_cost) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  auto objective = [&](const baselines::PiAlineaGains& gains) -> double {
    ExperimentConfig c = cfg;
    c.controller = ControllerKind::pi_alinea;
    c.pi_gains = gains;
    double acc = 0.0;
    int n = 0;
    for (int s = 0; s < cfg.tune_seeds; ++s) {
      const std::uint64_t seed = cfg.seeds[s % cfg.seeds.size()];
      PiAlineaController controller(c);
      for (int e = 0; e < 1; ++e) {
        const scenario::ScenarioRealization scn =
            scenario::generate_scenario(c.scenario, c.true_params, derive_seed(seed, e, 0));
        EpisodeOptions opts;
        opts.episode_index = e;
        const EpisodeResult res = run_episode(c, controller, scn, opts);
        if (res.metrics.failed) return std::numeric_limits<double>::quiet_NaN();
        acc += res.metrics.total_cost;
        ++n;
      }
    }
    return acc / n;
  };

  const baselines::PiAlineaGains tuned = baselines::tune_gains(objective, cfg.tune, cfg.seeds[0], best_cost);
  json j{{"K_P", tuned.K_P}, {"K_I", tuned.K_I}, {"rho_setpoint", tuned.rho_setpoint}};
  std::ofstream out(cfg.out_dir + "/tuned_gains.json");
  out << j.dump(2) << "\n";
  return tuned;
}

}  // namespace ramplab::harness
