#include "ramplab/harness/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ramplab::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// RFC-4180 line endings; numbers at 12 significant digits, which keeps the
// files deterministic across runs.
constexpr const char* kEol = "\r\n";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(const std::string& path) : out_(path, std::ios::binary) {}
  bool ok() const { return static_cast<bool>(out_); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << kEol;
  }

 private:
  std::ofstream out_;
};

// two-sided 95% Student-t quantiles by degrees of freedom
double t975(int df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                 2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                 2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) return 0.0;
  if (df <= 30) return table[df - 1];
  return 1.96;
}

}  // namespace

std::vector<std::string> theta_names(const mpc::ThetaLayout& layout) {
  std::vector<std::string> names(layout.dim);
  for (int i = 0; i < layout.dim; ++i) names[i] = layout.name(i);
  return names;
}

void write_episodes_csv(const std::string& path, const std::vector<EpisodeMetrics>& rows) {
  Csv csv(path);
  csv.row({"episode", "tts_raw", "var_raw", "viol_raw", "tts_cost", "var_cost", "viol_cost",
           "total_cost", "max_queue", "violating_steps", "mean_abs_td", "degraded_solves",
           "failed"});
  for (const auto& m : rows)
    csv.row({std::to_string(m.episode), num(m.tts_raw), num(m.var_raw), num(m.viol_raw),
             num(m.tts_cost), num(m.var_cost), num(m.viol_cost), num(m.total_cost),
             num(m.max_queue), std::to_string(m.violating_steps), num(m.mean_abs_td),
             std::to_string(m.degraded_solves), m.failed ? "1" : "0"});
}

void write_theta_csv(const std::string& path, const std::vector<Eigen::VectorXd>& history,
                     const mpc::ThetaLayout& layout) {
  Csv csv(path);
  std::vector<std::string> header = {"episode"};
  for (const auto& n : theta_names(layout)) header.push_back(n);
  csv.row(header);
  for (std::size_t e = 0; e < history.size(); ++e) {
    std::vector<std::string> cells = {std::to_string(static_cast<int>(e) - 1)};
    for (int i = 0; i < history[e].size(); ++i) cells.push_back(num(history[e][i]));
    csv.row(cells);
  }
}

void write_td_csv(const std::string& path, const std::vector<double>& deltas, int window) {
  Csv csv(path);
  csv.row({"sample", "delta", "moving_avg"});
  double acc = 0.0;
  std::vector<double> win;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    win.push_back(deltas[i]);
    acc += deltas[i];
    if (static_cast<int>(win.size()) > window) {
      acc -= win[win.size() - window - 1];
    }
    const int effective = std::min<int>(window, static_cast<int>(win.size()));
    double ma = 0.0;
    for (std::size_t k = win.size() - effective; k < win.size(); ++k) ma += win[k];
    ma /= effective;
    csv.row({std::to_string(i), num(deltas[i]), num(ma)});
  }
}

void write_updates_csv(const std::string& path, const std::vector<rl::UpdateReport>& updates) {
  Csv csv(path);
  csv.row({"episode", "p_norm", "h_condition", "regularization", "mean_abs_delta", "used",
           "skipped", "step_norm", "active_bounds", "ok"});
  for (std::size_t e = 0; e < updates.size(); ++e) {
    const auto& u = updates[e];
    csv.row({std::to_string(e), num(u.p_norm), num(u.h_condition), num(u.regularization),
             num(u.mean_abs_delta), std::to_string(u.used), std::to_string(u.skipped),
             num(u.delta_theta.size() ? u.delta_theta.norm() : 0.0),
             std::to_string(u.active_bounds.size()), u.ok ? "1" : "0"});
  }
}

void write_trace_csv(const std::string& path, const EpisodeMetrics& m, double T_h) {
  if (!m.has_traces) return;
  Csv csv(path);
  const int nS = static_cast<int>(m.trace_rho.cols());
  const int nO = static_cast<int>(m.trace_w.cols());
  std::vector<std::string> header = {"k", "time_s"};
  for (int j = 0; j < nS; ++j) header.push_back("rho_" + std::to_string(j + 1));
  for (int j = 0; j < nS; ++j) header.push_back("v_" + std::to_string(j + 1));
  for (int j = 0; j < nS; ++j) header.push_back("q_" + std::to_string(j + 1));
  for (int o = 0; o < nO; ++o) header.push_back("w_" + std::to_string(o + 1));
  header.push_back("r_cmd");
  for (int c = 0; c < m.trace_disturbance.cols(); ++c)
    header.push_back(c < nO ? "d_o" + std::to_string(c + 1)
                            : "d_rho_" + std::to_string(c - nO + 1));
  csv.row(header);

  for (int k = 0; k < m.trace_rho.rows(); ++k) {
    std::vector<std::string> cells = {std::to_string(k + 1), num((k + 1) * T_h * 3600.0)};
    for (int j = 0; j < nS; ++j) cells.push_back(num(m.trace_rho(k, j)));
    for (int j = 0; j < nS; ++j) cells.push_back(num(m.trace_v(k, j)));
    for (int j = 0; j < nS; ++j) cells.push_back(num(m.trace_flow(k, j)));
    for (int o = 0; o < nO; ++o) cells.push_back(num(m.trace_w(k, o)));
    cells.push_back(num(m.trace_r[k]));
    for (int c = 0; c < m.trace_disturbance.cols(); ++c)
      cells.push_back(num(m.trace_disturbance(k, c)));
    csv.row(cells);
  }
}

void write_summary_json(const std::string& path, const RunArtifacts& artifacts) {
  json per_episode = json::array();
  const int n_eps = artifacts.seeds.empty()
                        ? 0
                        : static_cast<int>(artifacts.seeds.front().episodes.size());
  const int n_seeds = static_cast<int>(artifacts.seeds.size());
  for (int e = 0; e < n_eps; ++e) {
    auto stat = [&](auto field) {
      double mean = 0.0;
      for (const auto& s : artifacts.seeds) mean += field(s.episodes[e]);
      mean /= n_seeds;
      double var = 0.0;
      for (const auto& s : artifacts.seeds) {
        const double d = field(s.episodes[e]) - mean;
        var += d * d;
      }
      const double sem = n_seeds > 1 ? std::sqrt(var / (n_seeds - 1) / n_seeds) : 0.0;
      const double half = t975(n_seeds - 1) * sem;
      return json{{"mean", mean}, {"ci95_half_width", half}};
    };
    per_episode.push_back(
        json{{"episode", e},
             {"tts_cost", stat([](const EpisodeMetrics& m) { return m.tts_cost; })},
             {"var_cost", stat([](const EpisodeMetrics& m) { return m.var_cost; })},
             {"viol_cost", stat([](const EpisodeMetrics& m) { return m.viol_cost; })},
             {"total_cost", stat([](const EpisodeMetrics& m) { return m.total_cost; })},
             {"max_queue", stat([](const EpisodeMetrics& m) { return m.max_queue; })}});
  }

  json j;
  j["controller"] = to_string(artifacts.config.controller);
  j["episodes"] = n_eps;
  j["seeds"] = artifacts.config.seeds;
  j["degraded"] = artifacts.any_degraded();
  j["per_episode"] = per_episode;
  j["mean_total_cost"] = mean_total_cost(artifacts);

  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

RunArtifacts read_artifacts(const std::string& out_dir) {
  RunArtifacts art;
  art.config = ExperimentConfig::load(out_dir + "/config.resolved.json");

  for (std::uint64_t seed : art.config.seeds) {
    const std::string dir = out_dir + "/seed_" + std::to_string(seed);
    if (!fs::exists(dir + "/episodes.csv")) continue;
    SeedArtifacts sa;
    sa.seed = seed;

    for (const auto& row : read_csv(dir + "/episodes.csv")) {
      if (row[0] == "episode") continue;
      EpisodeMetrics m;
      m.episode = std::stoi(row[0]);
      m.tts_raw = std::stod(row[1]);
      m.var_raw = std::stod(row[2]);
      m.viol_raw = std::stod(row[3]);
      m.tts_cost = std::stod(row[4]);
      m.var_cost = std::stod(row[5]);
      m.viol_cost = std::stod(row[6]);
      m.total_cost = std::stod(row[7]);
      m.max_queue = std::stod(row[8]);
      m.violating_steps = std::stoi(row[9]);
      m.mean_abs_td = std::stod(row[10]);
      m.degraded_solves = std::stoi(row[11]);
      m.failed = row[12] == "1";
      sa.episodes.push_back(m);
    }
    if (fs::exists(dir + "/theta.csv")) {
      for (const auto& row : read_csv(dir + "/theta.csv")) {
        if (row[0] == "episode") continue;
        Eigen::VectorXd t(static_cast<int>(row.size()) - 1);
        for (int i = 1; i < static_cast<int>(row.size()); ++i) t[i - 1] = std::stod(row[i]);
        sa.theta_history.push_back(t);
      }
      if (!sa.theta_history.empty()) sa.final_theta = sa.theta_history.back();
    }
    if (fs::exists(dir + "/td.csv")) {
      for (const auto& row : read_csv(dir + "/td.csv")) {
        if (row[0] == "sample") continue;
        sa.td_deltas.push_back(std::stod(row[1]));
      }
    }
    art.seeds.push_back(std::move(sa));
  }
  return art;
}

ExportManifest export_report(const std::string& out_dir, const std::string& export_dir) {
  ExportManifest manifest;
  fs::create_directories(export_dir);
  const RunArtifacts art = read_artifacts(out_dir);
  const ExperimentConfig& cfg = art.config;

  auto note_written = [&](const std::string& f) { manifest.written.push_back(f); };
  auto note_skipped = [&](const std::string& f, const std::string& why) {
    manifest.skipped.push_back(f + ": " + why);
  };

  // learning-costs: the per-episode decomposition per seed
  {
    const std::string f = export_dir + "/learning-costs.csv";
    bool any = false;
    Csv csv(f);
    csv.row({"seed", "episode", "tts", "var", "viol", "total"});
    for (const auto& s : art.seeds)
      for (const auto& m : s.episodes) {
        csv.row({std::to_string(s.seed), std::to_string(m.episode), num(m.tts_cost),
                 num(m.var_cost), num(m.viol_cost), num(m.total_cost)});
        any = true;
      }
    if (any) note_written(f);
    else note_skipped(f, "no episode rows found");
  }

  // theta trajectory
  {
    const std::string f = export_dir + "/theta-trajectory.csv";
    bool any = false;
    const auto names = theta_names(cfg.initial_theta().layout);
    Csv csv(f);
    std::vector<std::string> header = {"seed", "episode"};
    for (const auto& n : names) header.push_back(n);
    csv.row(header);
    for (const auto& s : art.seeds)
      for (std::size_t e = 0; e < s.theta_history.size(); ++e) {
        std::vector<std::string> cells = {std::to_string(s.seed),
                                          std::to_string(static_cast<int>(e) - 1)};
        for (int i = 0; i < s.theta_history[e].size(); ++i)
          cells.push_back(num(s.theta_history[e][i]));
        csv.row(cells);
        any = true;
      }
    if (any) note_written(f);
    else note_skipped(f, "no theta history (evaluation run?)");
  }

  // td error moving average
  {
    const std::string f = export_dir + "/td-error.csv";
    bool any = false;
    const int window = cfg.controls_per_episode() - 1;
    Csv csv(f);
    csv.row({"seed", "sample", "delta", "moving_avg"});
    for (const auto& s : art.seeds) {
      double acc = 0.0;
      std::deque<double> win;
      for (std::size_t i = 0; i < s.td_deltas.size(); ++i) {
        win.push_back(s.td_deltas[i]);
        acc += s.td_deltas[i];
        if (static_cast<int>(win.size()) > window) {
          acc -= win.front();
          win.pop_front();
        }
        csv.row({std::to_string(s.seed), std::to_string(i), num(s.td_deltas[i]),
                 num(acc / static_cast<double>(win.size()))});
        any = true;
      }
    }
    if (any) note_written(f);
    else note_skipped(f, "no td series (evaluation run?)");
  }

  // queue trace, segment heatmaps and the scenario envelope come from the
  // retained per-episode traces
  {
    const std::string fq = export_dir + "/queue-trace.csv";
    const std::string fh = export_dir + "/segment-heatmaps.csv";
    const std::string fs = export_dir + "/scenario-envelope.csv";
    bool any = false;
    Csv q(fq), h(fh), sc(fs);
    q.row({"seed", "episode", "k", "time_s", "w_ramp", "r_cmd"});
    h.row({"seed", "episode", "k", "segment", "rho", "v", "flow"});
    sc.row({"seed", "episode", "time_s", "d_O1", "d_O2", "d_rho_D1"});
    for (const auto& s : art.seeds) {
      const std::string tdir = out_dir + "/seed_" + std::to_string(s.seed) + "/traces";
      if (!fs::exists(tdir)) continue;
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(tdir)) files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& file : files) {
        const std::string stem = file.stem().string();  // ep_<e>
        const int episode = std::stoi(stem.substr(3));
        const auto rows = read_csv(file.string());
        if (rows.size() < 2) continue;
        // column layout is fixed by write_trace_csv
        const int nS = cfg.topology.num_segments();
        const int nO = cfg.topology.num_origins();
        int ramp = 0;
        for (int o = 0; o < nO; ++o)
          if (cfg.topology.origins[o].kind == traffic::OriginKind::on_ramp) ramp = o;
        for (std::size_t r = 1; r < rows.size(); ++r) {
          const auto& row = rows[r];
          const std::string& k = row[0];
          const std::string& time_s = row[1];
          q.row({std::to_string(s.seed), std::to_string(episode), k, time_s,
                 row[2 + 3 * nS + ramp], row[2 + 3 * nS + nO]});
          for (int j = 0; j < nS; ++j)
            h.row({std::to_string(s.seed), std::to_string(episode), k, std::to_string(j + 1),
                   row[2 + j], row[2 + nS + j], row[2 + 2 * nS + j]});
          sc.row({std::to_string(s.seed), std::to_string(episode), time_s,
                  row[2 + 3 * nS + nO + 1], row[2 + 3 * nS + nO + 2],
                  row[2 + 3 * nS + nO + 1 + nO]});
          any = true;
        }
      }
    }
    if (any) {
      note_written(fq);
      note_written(fh);
      note_written(fs);
    } else {
      note_skipped(fq, "no retained traces");
      note_skipped(fh, "no retained traces");
      note_skipped(fs, "no retained traces");
    }
  }

  {
    const std::string f = export_dir + "/summary.json";
    write_summary_json(f, art);
    note_written(f);
  }

  json mj{{"written", manifest.written}, {"skipped", manifest.skipped}};
  std::ofstream mo(export_dir + "/manifest.json", std::ios::binary);
  mo << mj.dump(2) << "\n";
  return manifest;
}

}  // namespace ramplab::harness
