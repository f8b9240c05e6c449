#include "ramplab/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ramplab::harness {

using nlohmann::json;

const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::mpcrl: return "mpcrl";
    case ControllerKind::mpc_fixed: return "mpc-fixed";
    case ControllerKind::pi_alinea: return "pi-alinea";
  }
  return "unknown";
}

ControllerKind controller_from_string(const std::string& s) {
  if (s == "mpcrl") return ControllerKind::mpcrl;
  if (s == "mpc-fixed") return ControllerKind::mpc_fixed;
  if (s == "pi-alinea") return ControllerKind::pi_alinea;
  throw ConfigError("unknown controller '" + s + "' (expected mpcrl, mpc-fixed or pi-alinea)");
}

int ExperimentConfig::steps_per_episode() const {
  return static_cast<int>(std::llround(scenario.horizon_h / true_params.T));
}

void ExperimentConfig::validate() const {
  try {
    topology.validate();
    true_params.validate();
    scenario.validate();
    horizon.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (steps_per_episode() % horizon.M != 0)
    throw ConfigError("episode length must be a whole number of control periods");
  if (weights.c_T < 0 || weights.c_V < 0 || weights.c_C < 0)
    throw ConfigError("stage-cost weights must be nonnegative");
  if (solver.tol <= 0 || solver.max_iter < 1) throw ConfigError("invalid solver options");
  if (learner.batch_episodes < 1) throw ConfigError("learner batch must cover >= 1 episode");
  if (!(learner.alpha_init >= 0)) throw ConfigError("learning rate must be nonnegative");
  if (mismatch_rho_crit <= 0 || mismatch_a <= 0 || mismatch_v_free <= 0)
    throw ConfigError("mismatch factors must be positive");
  if (controller == ControllerKind::mpcrl || controller == ControllerKind::mpc_fixed) {
    // the approximator rejects unsupported topologies early
    int mains = 0, ramps = 0;
    for (const auto& o : topology.origins)
      (o.kind == traffic::OriginKind::mainstream ? mains : ramps) += 1;
    if (mains != 1 || ramps != 1)
      throw ConfigError("MPC controllers support one mainstream origin and one metered ramp");
  }
}

void ExperimentConfig::apply_desk_preset() {
  horizon.Np = 12;
  horizon.Nc = 2;
  episodes = 20;
  if (seeds.size() > 3) seeds.resize(3);
}

namespace {

json profile_to_json(const scenario::ProfileConfig& p) {
  return json{{"node_times_h", p.node_times_h},
              {"node_values", p.node_values},
              {"node_value_std", p.node_value_std},
              {"time_jitter_std_h", p.time_jitter_std_h}};
}

void profile_from_json(const json& j, scenario::ProfileConfig& p) {
  if (j.contains("node_times_h")) p.node_times_h = j.at("node_times_h").get<std::vector<double>>();
  if (j.contains("node_values")) p.node_values = j.at("node_values").get<std::vector<double>>();
  if (j.contains("node_value_std"))
    p.node_value_std = j.at("node_value_std").get<std::vector<double>>();
  if (j.contains("time_jitter_std_h")) p.time_jitter_std_h = j.at("time_jitter_std_h");
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string ExperimentConfig::to_json_string() const {
  json topo_j;
  {
    json segs = json::array();
    for (const auto& s : topology.segments)
      segs.push_back({{"length_km", s.length_km}, {"lanes", s.lanes}});
    json origins = json::array();
    for (const auto& o : topology.origins)
      origins.push_back({{"kind", o.kind == traffic::OriginKind::mainstream ? "mainstream" : "on-ramp"},
                         {"capacity", o.capacity},
                         {"entry_segment", o.entry_segment}});
    topo_j = {{"segments", segs},
              {"origins", origins},
              {"destinations", topology.destinations},
              {"constrained_origins", topology.constrained_origins}};
  }

  const json j{
      {"topology", topo_j},
      {"metanet",
       {{"T_s", true_params.T * 3600.0},
        {"tau_s", true_params.tau * 3600.0},
        {"eta", true_params.eta},
        {"kappa", true_params.kappa},
        {"mu", true_params.mu},
        {"a", true_params.a},
        {"rho_crit", true_params.rho_crit},
        {"v_free", true_params.v_free},
        {"rho_max", true_params.rho_max},
        {"w_max", true_params.w_max}}},
      {"stage_cost", {{"c_T", weights.c_T}, {"c_V", weights.c_V}, {"c_C", weights.c_C}}},
      {"scenario",
       {{"horizon_h", scenario.horizon_h},
        {"smoothing_window", scenario.smoothing_window},
        {"demand_o1", profile_to_json(scenario.demand_o1)},
        {"demand_o2", profile_to_json(scenario.demand_o2)},
        {"congestion_d1", profile_to_json(scenario.congestion_d1)}}},
      {"controller", to_string(controller)},
      {"horizon",
       {{"Np", horizon.Np}, {"Nc", horizon.Nc}, {"M", horizon.M}, {"gamma", horizon.gamma}}},
      {"ablation",
       {{"learn_rho_crit", flags.learn_rho_crit},
        {"learn_a", flags.learn_a},
        {"learn_v_free", flags.learn_v_free},
        {"setpoints_track_learned", flags.setpoints_track_learned}}},
      {"mismatch",
       {{"rho_crit", mismatch_rho_crit}, {"a", mismatch_a}, {"v_free", mismatch_v_free}}},
      {"solver", {{"tol", solver.tol}, {"max_iter", solver.max_iter}}},
      {"learner",
       {{"gamma", learner.gamma},
        {"td_discount_exponent", learner.td_discount_exponent},
        {"alpha_init", learner.alpha_init},
        {"alpha_decay", learner.alpha_decay},
        {"max_rel_step", learner.max_rel_step},
        {"rate_limit_floor", learner.rate_limit_floor},
        {"batch_episodes", learner.batch_episodes},
        {"recent_fraction", learner.recent_fraction},
        {"recent_window_episodes", learner.recent_window_episodes},
        {"sigma_q_init", learner.sigma_q_init},
        {"epsilon_init", learner.epsilon_init},
        {"exploration_decay", learner.exploration_decay},
        {"second_order_term", learner.second_order_term},
        {"hessian_min_eig", learner.hessian_min_eig}}},
      {"baseline",
       {{"K_P", pi_gains.K_P},
        {"K_I", pi_gains.K_I},
        {"rho_setpoint", pi_gains.rho_setpoint},
        {"tune_budget", tune.budget},
        {"tune_kp_range", {tune.kp_min, tune.kp_max}},
        {"tune_ki_range", {tune.ki_min, tune.ki_max}},
        {"tune_seeds", tune_seeds}}},
      {"episodes", episodes},
      {"seeds", seeds},
      {"out_dir", out_dir},
      {"theta_path", theta_path},
      {"traces", traces == TraceRetention::none ? "none"
                 : traces == TraceRetention::all ? "all"
                                                 : "edges"},
      {"threads", threads},
  };
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  try {
    if (j.contains("topology")) {
      const json& t = j.at("topology");
      if (t.contains("segments")) {
        cfg.topology.segments.clear();
        for (const auto& s : t.at("segments"))
          cfg.topology.segments.push_back(
              {s.value("length_km", 1.0), s.value("lanes", 2.0)});
      }
      if (t.contains("origins")) {
        cfg.topology.origins.clear();
        for (const auto& o : t.at("origins")) {
          traffic::Origin org;
          org.kind = o.value("kind", std::string("on-ramp")) == "mainstream"
                         ? traffic::OriginKind::mainstream
                         : traffic::OriginKind::on_ramp;
          org.capacity = o.value("capacity", 2000.0);
          org.entry_segment = o.value("entry_segment", 0);
          cfg.topology.origins.push_back(org);
        }
      }
      maybe(t, "destinations", cfg.topology.destinations);
      maybe(t, "constrained_origins", cfg.topology.constrained_origins);
    }
    if (j.contains("metanet")) {
      const json& m = j.at("metanet");
      if (m.contains("T_s")) cfg.true_params.T = m.at("T_s").get<double>() / 3600.0;
      if (m.contains("tau_s")) cfg.true_params.tau = m.at("tau_s").get<double>() / 3600.0;
      maybe(m, "eta", cfg.true_params.eta);
      maybe(m, "kappa", cfg.true_params.kappa);
      maybe(m, "mu", cfg.true_params.mu);
      maybe(m, "a", cfg.true_params.a);
      maybe(m, "rho_crit", cfg.true_params.rho_crit);
      maybe(m, "v_free", cfg.true_params.v_free);
      maybe(m, "rho_max", cfg.true_params.rho_max);
      maybe(m, "w_max", cfg.true_params.w_max);
    }
    if (j.contains("stage_cost")) {
      const json& w = j.at("stage_cost");
      maybe(w, "c_T", cfg.weights.c_T);
      maybe(w, "c_V", cfg.weights.c_V);
      maybe(w, "c_C", cfg.weights.c_C);
    }
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      maybe(s, "horizon_h", cfg.scenario.horizon_h);
      maybe(s, "smoothing_window", cfg.scenario.smoothing_window);
      if (s.contains("demand_o1")) profile_from_json(s.at("demand_o1"), cfg.scenario.demand_o1);
      if (s.contains("demand_o2")) profile_from_json(s.at("demand_o2"), cfg.scenario.demand_o2);
      if (s.contains("congestion_d1"))
        profile_from_json(s.at("congestion_d1"), cfg.scenario.congestion_d1);
    }
    if (j.contains("controller"))
      cfg.controller = controller_from_string(j.at("controller").get<std::string>());
    if (j.contains("horizon")) {
      const json& h = j.at("horizon");
      maybe(h, "Np", cfg.horizon.Np);
      maybe(h, "Nc", cfg.horizon.Nc);
      maybe(h, "M", cfg.horizon.M);
      maybe(h, "gamma", cfg.horizon.gamma);
    }
    if (j.contains("ablation")) {
      const json& a = j.at("ablation");
      maybe(a, "learn_rho_crit", cfg.flags.learn_rho_crit);
      maybe(a, "learn_a", cfg.flags.learn_a);
      maybe(a, "learn_v_free", cfg.flags.learn_v_free);
      maybe(a, "setpoints_track_learned", cfg.flags.setpoints_track_learned);
    }
    if (j.contains("mismatch")) {
      const json& m = j.at("mismatch");
      maybe(m, "rho_crit", cfg.mismatch_rho_crit);
      maybe(m, "a", cfg.mismatch_a);
      maybe(m, "v_free", cfg.mismatch_v_free);
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      maybe(s, "tol", cfg.solver.tol);
      maybe(s, "max_iter", cfg.solver.max_iter);
    }
    if (j.contains("learner")) {
      const json& l = j.at("learner");
      maybe(l, "gamma", cfg.learner.gamma);
      maybe(l, "td_discount_exponent", cfg.learner.td_discount_exponent);
      maybe(l, "alpha_init", cfg.learner.alpha_init);
      maybe(l, "alpha_decay", cfg.learner.alpha_decay);
      maybe(l, "max_rel_step", cfg.learner.max_rel_step);
      maybe(l, "rate_limit_floor", cfg.learner.rate_limit_floor);
      maybe(l, "batch_episodes", cfg.learner.batch_episodes);
      maybe(l, "recent_fraction", cfg.learner.recent_fraction);
      maybe(l, "recent_window_episodes", cfg.learner.recent_window_episodes);
      maybe(l, "sigma_q_init", cfg.learner.sigma_q_init);
      maybe(l, "epsilon_init", cfg.learner.epsilon_init);
      maybe(l, "exploration_decay", cfg.learner.exploration_decay);
      maybe(l, "second_order_term", cfg.learner.second_order_term);
      maybe(l, "hessian_min_eig", cfg.learner.hessian_min_eig);
    }
    if (j.contains("baseline")) {
      const json& b = j.at("baseline");
      maybe(b, "K_P", cfg.pi_gains.K_P);
      maybe(b, "K_I", cfg.pi_gains.K_I);
      maybe(b, "rho_setpoint", cfg.pi_gains.rho_setpoint);
      maybe(b, "tune_budget", cfg.tune.budget);
      if (b.contains("tune_kp_range")) {
        cfg.tune.kp_min = b.at("tune_kp_range").at(0);
        cfg.tune.kp_max = b.at("tune_kp_range").at(1);
      }
      if (b.contains("tune_ki_range")) {
        cfg.tune.ki_min = b.at("tune_ki_range").at(0);
        cfg.tune.ki_max = b.at("tune_ki_range").at(1);
      }
      maybe(b, "tune_seeds", cfg.tune_seeds);
    }
    maybe(j, "episodes", cfg.episodes);
    maybe(j, "seeds", cfg.seeds);
    maybe(j, "out_dir", cfg.out_dir);
    maybe(j, "theta_path", cfg.theta_path);
    if (j.contains("traces")) {
      const std::string t = j.at("traces");
      cfg.traces = t == "none"  ? TraceRetention::none
                   : t == "all" ? TraceRetention::all
                   : t == "edges"
                       ? TraceRetention::edges
                       : throw ConfigError("traces must be one of none, edges, all");
    }
    maybe(j, "threads", cfg.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << to_json_string() << "\n";
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t episode, std::uint64_t stream) {
  // splitmix64 over a mixed key
  std::uint64_t z = master ^ (episode * 0x9E3779B97F4A7C15ull) ^ (stream * 0xBF58476D1CE4E5B9ull);
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t config_digest(const ExperimentConfig& cfg) {
  const std::string s = cfg.to_json_string();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ramplab::harness
