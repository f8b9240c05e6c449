#pragma once

#include <string>
#include <vector>

#include "ramplab/harness/train.hpp"

namespace ramplab::harness {

std::vector<std::string> theta_names(const mpc::ThetaLayout& layout);

// per-seed data files (train/evaluate write them incrementally)
void write_episodes_csv(const std::string& path, const std::vector<EpisodeMetrics>& rows);
void write_theta_csv(const std::string& path, const std::vector<Eigen::VectorXd>& history,
                     const mpc::ThetaLayout& layout);
void write_td_csv(const std::string& path, const std::vector<double>& deltas, int window);
void write_updates_csv(const std::string& path, const std::vector<rl::UpdateReport>& updates);
void write_trace_csv(const std::string& path, const EpisodeMetrics& m, double T_h);
void write_summary_json(const std::string& path, const RunArtifacts& artifacts);

/// Reload the per-seed artifact files of a finished (or partial) run.
RunArtifacts read_artifacts(const std::string& out_dir);

struct ExportManifest {
  std::vector<std::string> written;
  std::vector<std::string> skipped;  // "file: reason"
};

/// Figure-data exports derived from a run directory: learning-costs,
/// queue-trace, theta-trajectory, td-error, segment-heatmaps,
/// scenario-envelope (CSV) and a JSON summary, plus a manifest of what could
/// and could not be produced.
ExportManifest export_report(const std::string& out_dir, const std::string& export_dir);

}  // namespace ramplab::harness
